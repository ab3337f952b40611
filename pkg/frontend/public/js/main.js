// DOM wiring for the side-by-side comparison screen and the PMAS
// leaderboard. Window/level is a client-side display filter applied
// identically to both panes; the underlying PNGs stay untouched.
import { ApiClient } from './api.js';
import { AnnotationSession, leaderboardRows } from './session.js';
const api = new ApiClient('');
const annotator = new URLSearchParams(window.location.search).get('annotator') ?? 'anonymous';
const session = new AnnotationSession(api, annotator);
function el(id) {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing element #${id}`);
    }
    return node;
}
const leftImg = el('left-pane');
const rightImg = el('right-pane');
const sliceSlider = el('slice-slider');
const sliceLabel = el('slice-label');
const progress = el('progress');
const windowSlider = el('window-slider');
const levelSlider = el('level-slider');
const banner = el('banner');
const doneScreen = el('done-screen');
const annotateScreen = el('annotate-screen');
const board = el('leaderboard-body');
function applyWindowLevel() {
    // identical display transform for both panes
    const contrast = Number(windowSlider.value) / 50;
    const brightness = Number(levelSlider.value) / 50;
    const filter = `contrast(${contrast}) brightness(${brightness})`;
    leftImg.style.filter = filter;
    rightImg.style.filter = filter;
}
function showBanner(text) {
    banner.textContent = text;
    banner.hidden = text === '';
}
function refreshImages() {
    const view = session.state.view;
    if (!view) {
        return;
    }
    const urls = session.sliceUrls();
    leftImg.src = urls.left;
    rightImg.src = urls.right;
    sliceSlider.max = String(view.maxIndex);
    sliceSlider.value = String(view.sliceIndex);
    sliceLabel.textContent = `${view.axis} ${view.sliceIndex}/${view.maxIndex}`;
    progress.textContent = `${view.nDone}/${view.nTotal}`;
}
async function refreshLeaderboard() {
    const pmas = await api.pmas();
    board.replaceChildren();
    for (const row of leaderboardRows(pmas.scores)) {
        const tr = document.createElement('tr');
        const name = document.createElement('td');
        name.textContent = row.id;
        const value = document.createElement('td');
        value.textContent = row.beta.toFixed(3);
        const bar = document.createElement('td');
        const span = document.createElement('div');
        span.className = 'score-bar';
        span.style.width = `${Math.min(100, Math.abs(row.beta) * 40)}px`;
        span.classList.add(row.beta >= 0 ? 'worse' : 'better');
        bar.appendChild(span);
        tr.append(name, value, bar);
        board.appendChild(tr);
    }
}
async function render() {
    if (session.state.finished) {
        annotateScreen.hidden = true;
        doneScreen.hidden = false;
        await refreshLeaderboard();
        return;
    }
    annotateScreen.hidden = false;
    doneScreen.hidden = true;
    refreshImages();
}
async function decide(outcome) {
    try {
        showBanner('');
        await session.decide(outcome);
        // the leaderboard (real ids!) is only fetched once the blinded
        // annotation pass is complete; render() handles that switch
        await render();
    }
    catch (err) {
        showBanner(`submission failed, retrying is safe: ${String(err)}`);
    }
}
el('btn-left-worse').addEventListener('click', () => void decide('left_worse'));
el('btn-similar').addEventListener('click', () => void decide('similar'));
el('btn-right-worse').addEventListener('click', () => void decide('right_worse'));
document.addEventListener('keydown', (ev) => {
    if (ev.key === '1')
        void decide('left_worse');
    else if (ev.key === '2')
        void decide('similar');
    else if (ev.key === '3')
        void decide('right_worse');
    else if (ev.key === 'ArrowUp' || ev.key === 'ArrowRight') {
        session.setSlice((session.state.view?.sliceIndex ?? 0) + 1);
        refreshImages();
    }
    else if (ev.key === 'ArrowDown' || ev.key === 'ArrowLeft') {
        session.setSlice((session.state.view?.sliceIndex ?? 0) - 1);
        refreshImages();
    }
});
sliceSlider.addEventListener('input', () => {
    session.setSlice(Number(sliceSlider.value));
    refreshImages();
});
for (const axis of ['x', 'y', 'z']) {
    el(`axis-${axis}`).addEventListener('click', () => {
        void session.setAxis(axis).then(refreshImages);
    });
}
windowSlider.addEventListener('input', applyWindowLevel);
levelSlider.addEventListener('input', applyWindowLevel);
for (const img of [leftImg, rightImg]) {
    img.addEventListener('error', () => showBanner('image failed to load; move the slider to retry'));
}
void (async () => {
    await session.advance();
    await render();
    applyWindowLevel();
})();
