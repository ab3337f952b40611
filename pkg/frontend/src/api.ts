// Typed client for the annotation service. The server only ever hands out
// opaque tokens; real scan identifiers never reach this code path.

export interface PairResponse {
  pair_token: string | null;
  left_id_opaque: string | null;
  right_id_opaque: string | null;
  n_done: number;
  n_total: number;
  done: boolean;
}

export interface PmasResponse {
  scores: Record<string, number>;
  n_comparisons: number;
}

export type Outcome = 'left_worse' | 'right_worse' | 'similar';

export class ApiClient {
  constructor(private baseUrl: string = '') {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) {
      throw new Error(`GET ${path} failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  nextPair(): Promise<PairResponse> {
    return this.getJson<PairResponse>('/api/pairs/next');
  }

  volumeDims(opaque: string): Promise<{ dims: number[] }> {
    return this.getJson<{ dims: number[] }>(`/api/volumes/${opaque}/dims`);
  }

  sliceUrl(opaque: string, axis: 'x' | 'y' | 'z', index: number): string {
    return `${this.baseUrl}/api/slices/${opaque}/${axis}/${index}.png`;
  }

  async postComparison(pairToken: string, outcome: Outcome, annotator: string): Promise<number> {
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

  pmas(): Promise<PmasResponse> {
    return this.getJson<PmasResponse>('/api/pmas');
  }
}
