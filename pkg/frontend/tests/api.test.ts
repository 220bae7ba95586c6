import { describe, expect, it } from 'vitest'

import { ApiClient, ApiError } from '../src/api.js'
import { MockServer } from './mockServer.js'

describe('ApiClient', () => {
  it('round-trips the session endpoints', async () => {
    const server = new MockServer()
    const api = new ApiClient('', server.fetch)
    const created = await api.createSession({})
    expect(created.session_id).toBe('mock-session')
    expect(created.class_count).toBe(4)
    const status = await api.getStatus(created.session_id)
    expect(status.phase).toBe('awaiting_labels')
    expect(status.history).toHaveLength(1)
    const batch = await api.getBatch(created.session_id)
    expect(batch.items).toHaveLength(5)
  })

  it('sends the documented submission body', async () => {
    const server = new MockServer()
    const api = new ApiClient('', server.fetch)
    const batch = await api.getBatch(server.sessionId)
    const labels = batch.items.map((it) => ({ sample_id: it.sample_id, label: 1 }))
    await api.submitLabels(server.sessionId, labels)
    expect(server.submissions).toEqual([labels])
  })

  it('raises ApiError carrying status and server detail', async () => {
    const server = new MockServer()
    const api = new ApiClient('', server.fetch)
    await expect(
      api.submitLabels(server.sessionId, [{ sample_id: 12345, label: 0 }]),
    ).rejects.toMatchObject({ status: 400, detail: expect.stringContaining('not pending') })
    await expect(api.getBatch(server.sessionId)).resolves.toBeTruthy()
    server.phase = 'training'
    await expect(api.getBatch(server.sessionId)).rejects.toBeInstanceOf(ApiError)
  })
})
