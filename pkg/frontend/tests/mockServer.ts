// In-memory stand-in for the annotation service, speaking the same JSON
// contract over a fetch-compatible interface.

import type { BatchItem, HistoryPoint } from '../src/api.js'

const json = (body: unknown, status = 200): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })

export class MockServer {
  readonly sessionId = 'mock-session'
  readonly classCount = 4
  phase: 'training' | 'awaiting_labels' | 'finished' = 'awaiting_labels'
  iteration = 1
  pending: number[] = []
  collected = new Map<number, number>()
  history: HistoryPoint[] = []
  submissions: Array<Array<{ sample_id: number; label: number }>> = []
  failNextSubmitWith: number | null = null
  offline = false

  private nextId = 100
  private readonly batchSize: number
  private readonly totalBatches: number

  constructor(batchSize = 5, totalBatches = 3) {
    this.batchSize = batchSize
    this.totalBatches = totalBatches
    this.history.push(this.historyPoint(0))
    this.openBatch()
  }

  private historyPoint(iteration: number): HistoryPoint {
    return {
      iteration,
      pct_labeled: 0.1 + 0.05 * iteration,
      test_accuracy: 0.6 + 0.05 * iteration,
      pseudo_count: iteration * 3,
      pseudo_error_rate: 0.01,
      delta: Math.max(0, 0.05 - 0.0033 * iteration),
      annotations_cumulative: 20 + this.batchSize * iteration,
    }
  }

  private openBatch(): void {
    this.pending = Array.from({ length: this.batchSize }, () => this.nextId++)
    this.collected.clear()
    this.phase = 'awaiting_labels'
  }

  private completeBatch(): void {
    this.history.push(this.historyPoint(this.iteration))
    if (this.iteration >= this.totalBatches) {
      this.phase = 'finished'
      this.pending = []
    } else {
      this.iteration += 1
      this.openBatch()
    }
  }

  private batchItems(): BatchItem[] {
    return this.pending.map((id) => ({
      sample_id: id,
      score: id / 1000,
      label: this.collected.get(id) ?? null,
      display: { kind: 'features', values: [0.1, -0.4, 0.7] },
    }))
  }

  private statusBody() {
    const latest = this.history[this.history.length - 1]
    return {
      session_id: this.sessionId,
      phase: this.phase,
      iteration: latest.iteration,
      pct_labeled: latest.pct_labeled,
      test_accuracy: latest.test_accuracy,
      delta: latest.delta,
      pseudo_count: latest.pseudo_count,
      pseudo_error_rate: latest.pseudo_error_rate,
      annotations_cumulative: latest.annotations_cumulative,
      pending_count: this.pending.length,
      class_count: this.classCount,
      class_names: ['ant', 'bee', 'cat', 'dog'],
      history: this.history,
      error: null,
    }
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    if (this.offline) throw new TypeError('network down')
    if (url.endsWith('/sessions') && init?.method === 'POST') {
      return json({
        session_id: this.sessionId,
        phase: this.phase,
        class_count: this.classCount,
        class_names: ['ant', 'bee', 'cat', 'dog'],
      })
    }
    if (url.endsWith('/status')) {
      return json(this.statusBody())
    }
    if (url.endsWith('/batch')) {
      if (this.phase !== 'awaiting_labels') {
        return json({ detail: `no pending batch; phase is ${this.phase}` }, 409)
      }
      return json({
        session_id: this.sessionId,
        phase: this.phase,
        items: this.batchItems(),
        labeled_so_far: this.collected.size,
      })
    }
    if (url.endsWith('/labels') && init?.method === 'POST') {
      if (this.failNextSubmitWith !== null) {
        const status = this.failNextSubmitWith
        this.failNextSubmitWith = null
        return json({ detail: 'injected failure' }, status)
      }
      if (this.phase !== 'awaiting_labels') {
        return json({ detail: `phase is ${this.phase}` }, 409)
      }
      const body = JSON.parse(String(init.body)) as {
        labels: Array<{ sample_id: number; label: number }>
      }
      for (const { sample_id, label } of body.labels) {
        if (!this.pending.includes(sample_id)) {
          return json({ detail: `sample ${sample_id} is not pending` }, 400)
        }
        if (label < 0 || label >= this.classCount) {
          return json({ detail: `label ${label} out of range` }, 400)
        }
      }
      this.submissions.push(body.labels)
      for (const { sample_id, label } of body.labels) {
        this.collected.set(sample_id, label)
      }
      if (this.collected.size === this.batchSize) this.completeBatch()
      return json({ session_id: this.sessionId, phase: this.phase })
    }
    return json({ detail: `no route for ${url}` }, 404)
  }
}
