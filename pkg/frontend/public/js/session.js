// Annotation flow state machine, kept free of DOM concerns so the scripted
// session tests can drive it directly.
const AXIS_TO_DIM = { y: 0, z: 1, x: 2 };
// Annotators inspect sagittal planes by default; all three axes stay
// selectable. With array order (y, z, x) the sagittal plane is a fixed-y
// slice.
export const DEFAULT_AXIS = 'y';
export class AnnotationSession {
    constructor(api, annotator = 'anonymous', axis = DEFAULT_AXIS) {
        this.api = api;
        this.annotator = annotator;
        this.axis = axis;
        this.state = { view: null, finished: false };
        this.posted = new Set();
    }
    /** Fetch the current pair; idempotent until a decision is posted. */
    async advance() {
        const pair = await this.api.nextPair();
        if (pair.done || pair.pair_token === null) {
            this.state = { view: null, finished: true };
            return this.state;
        }
        const dims = (await this.api.volumeDims(pair.left_id_opaque)).dims;
        const maxIndex = dims[AXIS_TO_DIM[this.axis]] - 1;
        this.state = {
            finished: false,
            view: {
                pairToken: pair.pair_token,
                leftOpaque: pair.left_id_opaque,
                rightOpaque: pair.right_id_opaque,
                axis: this.axis,
                sliceIndex: Math.floor(maxIndex / 2),
                maxIndex,
                nDone: pair.n_done,
                nTotal: pair.n_total,
            },
        };
        return this.state;
    }
    /** Both panes always show the same axis and slice index. */
    sliceUrls() {
        const v = this.state.view;
        if (!v) {
            throw new Error('no active pair');
        }
        return {
            left: this.api.sliceUrl(v.leftOpaque, v.axis, v.sliceIndex),
            right: this.api.sliceUrl(v.rightOpaque, v.axis, v.sliceIndex),
        };
    }
    setSlice(index) {
        const v = this.state.view;
        if (!v) {
            return;
        }
        v.sliceIndex = Math.max(0, Math.min(v.maxIndex, index));
    }
    async setAxis(axis) {
        this.axis = axis;
        const v = this.state.view;
        if (!v) {
            return;
        }
        const dims = (await this.api.volumeDims(v.leftOpaque)).dims;
        v.axis = axis;
        v.maxIndex = dims[AXIS_TO_DIM[axis]] - 1;
        v.sliceIndex = Math.floor(v.maxIndex / 2);
    }
    /**
     * Record a decision and move to the next pair. Double submissions of the
     * same pair token post at most once (the server rejects replays anyway).
     */
    async decide(outcome) {
        const v = this.state.view;
        if (!v) {
            return this.state;
        }
        if (!this.posted.has(v.pairToken)) {
            this.posted.add(v.pairToken);
            await this.api.postComparison(v.pairToken, outcome, this.annotator);
        }
        return this.advance();
    }
}
/** PMAS scores sorted worst-first for the review screen. */
export function leaderboardRows(scores) {
    return Object.entries(scores)
        .map(([id, beta]) => ({ id, beta }))
        .sort((a, b) => b.beta - a.beta || a.id.localeCompare(b.id));
}
