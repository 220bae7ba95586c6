// Session controller: polls status, keeps the current batch state, and
// submits completed batches. DOM-free so the whole flow is testable.

import { ApiClient, ApiError } from './api.js'
import type { StatusResponse } from './api.js'
import { BatchLabeler } from './batch.js'

export type ControllerState = {
  phase: string
  status: StatusResponse | null
  batch: BatchLabeler | null
  submitting: boolean
  stale: boolean
  lastError: string | null
}

export class SessionController {
  private status: StatusResponse | null = null
  batch: BatchLabeler | null = null
  private submitting = false
  private stale = false
  private lastError: string | null = null
  private batchIteration: number | null = null

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    private readonly classCount: number,
    private readonly onChange: (state: ControllerState) => void = () => {},
  ) {}

  get state(): ControllerState {
    return {
      phase: this.status?.phase ?? 'training',
      status: this.status,
      batch: this.batch,
      submitting: this.submitting,
      stale: this.stale,
      lastError: this.lastError,
    }
  }

  private emit(): void {
    this.onChange(this.state)
  }

  // one poll tick: refresh status and fetch the batch when one is pending
  async refresh(): Promise<void> {
    let status: StatusResponse
    try {
      status = await this.api.getStatus(this.sessionId)
      this.stale = false
    } catch {
      this.stale = true // connectivity loss: keep showing the last data
      this.emit()
      return
    }
    this.status = status
    if (status.phase === 'awaiting_labels') {
      const freshIteration = this.batchIteration !== status.iteration
      if (!this.batch || freshIteration) {
        await this.fetchBatch()
      }
    } else {
      this.batch = null
      this.batchIteration = null
    }
    this.emit()
  }

  private async fetchBatch(): Promise<void> {
    try {
      const batch = await this.api.getBatch(this.sessionId)
      this.batch = new BatchLabeler(batch.items, this.classCount)
      this.batchIteration = this.status?.iteration ?? null
      this.lastError = null
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // batch already consumed; the next poll resolves the phase
        this.batch = null
      } else {
        this.lastError = String(err)
      }
    }
  }

  assignAtCursor(classIndex: number): void {
    this.batch?.assignAtCursor(classIndex)
    this.emit()
  }

  assign(sampleId: number, classIndex: number): void {
    this.batch?.assign(sampleId, classIndex)
    this.emit()
  }

  get canSubmit(): boolean {
    return !this.submitting && this.batch !== null && this.batch.complete
  }

  // submit fires once with the full map; incomplete batches are blocked here
  async submit(): Promise<boolean> {
    if (!this.canSubmit || !this.batch) return false
    this.submitting = true
    this.emit()
    try {
      await this.api.submitLabels(this.sessionId, this.batch.toSubmission())
      this.batch = null
      this.batchIteration = null
      this.lastError = null
      return true
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale batch: drop local state and refetch on the next poll
        this.batch = null
        this.batchIteration = null
      }
      this.lastError = String(err)
      return false
    } finally {
      this.submitting = false
      this.emit()
      await this.refresh()
    }
  }
}
