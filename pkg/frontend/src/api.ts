// Typed client for the annotation service JSON API.

export type DisplayPayload =
  | { kind: 'image'; url: string }
  | { kind: 'features'; values: number[] }

export type BatchItem = {
  sample_id: number
  score: number
  label: number | null
  display: DisplayPayload
}

export type BatchResponse = {
  session_id: string
  phase: string
  items: BatchItem[]
  labeled_so_far: number
}

export type HistoryPoint = {
  iteration: number
  pct_labeled: number
  test_accuracy: number
  pseudo_count: number
  pseudo_error_rate: number
  delta: number
  annotations_cumulative: number
}

export type StatusResponse = {
  session_id: string
  phase: string
  iteration: number | null
  pct_labeled: number
  test_accuracy: number | null
  delta: number
  pseudo_count: number
  pseudo_error_rate: number
  annotations_cumulative: number
  pending_count: number
  class_count: number
  class_names: string[] | null
  history: HistoryPoint[]
  error: string | null
}

export type CreateResponse = {
  session_id: string
  phase: string
  class_count: number
  class_names: string[] | null
}

export type LabelSubmission = { sample_id: number; label: number }

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`)
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init)
    if (!response.ok) {
      let detail = response.statusText
      try {
        const body = await response.json()
        if (body && typeof body.detail === 'string') detail = body.detail
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail)
    }
    return response.json() as Promise<T>
  }

  createSession(spec: object = {}): Promise<CreateResponse> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(spec),
    })
  }

  getBatch(sessionId: string): Promise<BatchResponse> {
    return this.request(`/sessions/${sessionId}/batch`)
  }

  submitLabels(sessionId: string, labels: LabelSubmission[]): Promise<{ phase: string }> {
    return this.request(`/sessions/${sessionId}/labels`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ labels }),
    })
  }

  getStatus(sessionId: string): Promise<StatusResponse> {
    return this.request(`/sessions/${sessionId}/status`)
  }
}
