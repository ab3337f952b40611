import { describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api.js';
import { AnnotationSession, leaderboardRows } from '../src/session.js';

interface FakePair {
  token: string;
  left: string;
  right: string;
}

function fakeApi(pairs: FakePair[], dims = [16, 20, 24]) {
  let cursor = 0;
  const posted: Array<{ token: string; outcome: string }> = [];
  const api = {
    nextPair: vi.fn(async () => {
      if (cursor >= pairs.length) {
        return {
          pair_token: null,
          left_id_opaque: null,
          right_id_opaque: null,
          n_done: pairs.length,
          n_total: pairs.length,
          done: true,
        };
      }
      const p = pairs[cursor];
      return {
        pair_token: p.token,
        left_id_opaque: p.left,
        right_id_opaque: p.right,
        n_done: cursor,
        n_total: pairs.length,
        done: false,
      };
    }),
    volumeDims: vi.fn(async () => ({ dims })),
    sliceUrl: (opaque: string, axis: string, index: number) =>
      `/api/slices/${opaque}/${axis}/${index}.png`,
    postComparison: vi.fn(async (token: string, outcome: string) => {
      posted.push({ token, outcome });
      cursor += 1;
      return 201;
    }),
    pmas: vi.fn(async () => ({ scores: {}, n_comparisons: posted.length })),
  };
  return { api: api as unknown as ApiClient, posted };
}

describe('AnnotationSession', () => {
  it('shows the same axis and slice in both panes', async () => {
    const { api } = fakeApi([{ token: 't1', left: 'aaa', right: 'bbb' }]);
    const session = new AnnotationSession(api, 'tester');
    await session.advance();
    const urls = session.sliceUrls();
    expect(urls.left).toBe('/api/slices/aaa/y/7.png'); // sagittal default, dim 16 -> centre 7
    expect(urls.right).toBe('/api/slices/bbb/y/7.png');
    session.setSlice(12);
    const moved = session.sliceUrls();
    expect(moved.left).toContain('/y/12.png');
    expect(moved.right).toContain('/y/12.png');
  });

  it('clamps slice scrubbing to the served range', async () => {
    const { api } = fakeApi([{ token: 't1', left: 'aaa', right: 'bbb' }]);
    const session = new AnnotationSession(api);
    await session.advance();
    session.setSlice(999);
    expect(session.state.view?.sliceIndex).toBe(15);
    session.setSlice(-5);
    expect(session.state.view?.sliceIndex).toBe(0);
  });

  it('switching axis re-centres against the right dimension', async () => {
    const { api } = fakeApi([{ token: 't1', left: 'aaa', right: 'bbb' }]);
    const session = new AnnotationSession(api);
    await session.advance();
    await session.setAxis('x');
    expect(session.state.view?.maxIndex).toBe(23);
    expect(session.sliceUrls().left).toBe('/api/slices/aaa/x/11.png');
  });

  it('posts one comparison and auto-advances', async () => {
    const { api, posted } = fakeApi([
      { token: 't1', left: 'a1', right: 'b1' },
      { token: 't2', left: 'a2', right: 'b2' },
    ]);
    const session = new AnnotationSession(api, 'tester');
    await session.advance();
    const state = await session.decide('left_worse');
    expect(posted).toEqual([{ token: 't1', outcome: 'left_worse' }]);
    expect(state.view?.pairToken).toBe('t2');
  });

  it('double decisions post exactly once per pair token', async () => {
    const { api, posted } = fakeApi([{ token: 't1', left: 'a', right: 'b' }]);
    const session = new AnnotationSession(api);
    await session.advance();
    await Promise.all([session.decide('similar'), session.decide('similar')]);
    expect(posted.filter((p) => p.token === 't1')).toHaveLength(1);
  });

  it('reports finished once all pairs are answered', async () => {
    const { api } = fakeApi([{ token: 't1', left: 'a', right: 'b' }]);
    const session = new AnnotationSession(api);
    await session.advance();
    const state = await session.decide('right_worse');
    expect(state.finished).toBe(true);
    expect(state.view).toBeNull();
  });
});

describe('leaderboardRows', () => {
  it('sorts descending by severity with stable id ties', () => {
    const rows = leaderboardRows({ a: 0.5, b: 2.0, c: -1.0, d: 0.5 });
    expect(rows.map((r) => r.id)).toEqual(['b', 'a', 'd', 'c']);
  });

  it('handles the all-similar flat board', () => {
    const rows = leaderboardRows({ a: 0, b: 0 });
    expect(rows.every((r) => r.beta === 0)).toBe(true);
  });
});
