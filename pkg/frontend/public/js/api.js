// Typed client for the annotation service. The server only ever hands out
// opaque tokens; real scan identifiers never reach this code path.
export class ApiClient {
    constructor(baseUrl = '') {
        this.baseUrl = baseUrl;
    }
    async getJson(path) {
        const resp = await fetch(this.baseUrl + path);
        if (!resp.ok) {
            throw new Error(`GET ${path} failed: ${resp.status}`);
        }
        return (await resp.json());
    }
    nextPair() {
        return this.getJson('/api/pairs/next');
    }
    volumeDims(opaque) {
        return this.getJson(`/api/volumes/${opaque}/dims`);
    }
    sliceUrl(opaque, axis, index) {
        return `${this.baseUrl}/api/slices/${opaque}/${axis}/${index}.png`;
    }
    async postComparison(pairToken, outcome, annotator) {
        const resp = await fetch(this.baseUrl + '/api/comparisons', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ pair_token: pairToken, outcome, annotator }),
        });
        if (resp.status !== 201 && resp.status !== 409) {
            throw new Error(`POST /api/comparisons failed: ${resp.status}`);
        }
        return resp.status;
    }
    pmas() {
        return this.getJson('/api/pmas');
    }
}
