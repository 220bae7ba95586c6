// Browser entry point: wires the session controller to the DOM.

import { ApiClient } from './api.js'
import type { BatchItem, HistoryPoint } from './api.js'
import { classForKey } from './batch.js'
import { annotatedFractionForTarget, chartSvg } from './charts.js'
import { SessionController } from './controller.js'
import type { ControllerState } from './controller.js'

const POLL_INTERVAL_MS = 1000

const api = new ApiClient('')
let controller: SessionController | null = null
let classNames: string[] = []
let pollTimer: number | undefined

const $ = (id: string) => document.getElementById(id)!

function classLabel(index: number): string {
  return classNames[index] ?? `class ${index}`
}

function renderDisplay(item: BatchItem): string {
  if (item.display.kind === 'image') {
    return `<img src="${item.display.url}" alt="sample ${item.sample_id}" loading="lazy">`
  }
  const values = item.display.values
  const max = Math.max(...values.map(Math.abs), 1e-9)
  const bars = values
    .map((v) => {
      const h = Math.round((Math.abs(v) / max) * 36) + 2
      return `<span class="featbar ${v < 0 ? 'neg' : ''}" style="height:${h}px" title="${v}"></span>`
    })
    .join('')
  return `<div class="featrow">${bars}</div>`
}

function renderBatch(state: ControllerState): void {
  const container = $('batch')
  const batch = state.batch
  if (!batch) {
    const phase = state.phase
    container.innerHTML =
      phase === 'finished'
        ? '<p class="hint">Session finished - no more batches.</p>'
        : '<p class="hint">Waiting for the next query batch...</p>'
    $('submit').setAttribute('disabled', 'true')
    return
  }
  const cards = batch.items
    .map((item) => {
      const label = batch.labelOf(item.sample_id)
      const isCursor = batch.cursor?.sample_id === item.sample_id
      return (
        `<div class="card ${isCursor ? 'cursor' : ''} ${label !== undefined ? 'done' : ''}" data-sample="${item.sample_id}">` +
        renderDisplay(item) +
        `<div class="meta">#${item.sample_id} <span class="score">score ${item.score.toFixed(3)}</span></div>` +
        `<div class="assigned">${label !== undefined ? classLabel(label) : '&mdash;'}</div>` +
        `</div>`
      )
    })
    .join('')
  container.innerHTML = `<div class="grid">${cards}</div>`
  container.querySelectorAll<HTMLElement>('.card').forEach((card) => {
    card.addEventListener('click', () => {
      batch.setCursor(Number(card.dataset.sample))
      render(controller!.state)
    })
  })
  const submit = $('submit')
  if (state.batch?.complete && !state.submitting) submit.removeAttribute('disabled')
  else submit.setAttribute('disabled', 'true')
  $('batch-progress').textContent = `${batch.labeledCount} / ${batch.items.length} labeled`
}

function renderPalette(): void {
  const palette = $('palette')
  palette.innerHTML = classNames
    .map(
      (name, i) =>
        `<button class="class-btn" data-class="${i}"><kbd>${i + 1}</kbd> ${name}</button>`,
    )
    .join('')
  palette.querySelectorAll<HTMLElement>('.class-btn').forEach((btn) => {
    btn.addEventListener('click', () => {
      controller?.assignAtCursor(Number(btn.dataset.class))
    })
  })
}

function renderProgress(state: ControllerState): void {
  const status = state.status
  const panel = $('progress')
  if (!status) {
    panel.innerHTML = '<p class="hint">No status yet.</p>'
    return
  }
  const history = status.history
  const accCurve = history.map((h: HistoryPoint) => ({ x: h.pct_labeled, y: h.test_accuracy }))
  const deltaCurve = history.map((h) => ({ x: h.iteration, y: h.delta }))
  const errCurve = history.map((h) => ({ x: h.iteration, y: h.pseudo_error_rate }))
  let summary = ''
  if (status.phase === 'finished' && accCurve.length > 0) {
    const final = accCurve[accCurve.length - 1].y
    const reach = annotatedFractionForTarget(accCurve, 0.95 * final)
    summary =
      `<p class="summary">Finished. Final accuracy ${(final * 100).toFixed(1)}%; ` +
      `95% of it was already reached with ${reach === null ? 'n/a' : (reach * 100).toFixed(0)}% ` +
      `of the pool annotated.</p>`
  }
  panel.innerHTML =
    chartSvg(accCurve, 'accuracy vs fraction annotated', { yMin: 0, yMax: 1 }) +
    chartSvg(deltaCurve, 'confidence threshold') +
    chartSvg(errCurve, 'pseudo-label error rate', { yMin: 0 }) +
    summary
  $('phase').textContent = status.phase + (state.stale ? ' (stale)' : '')
  $('phase').className = `phase ${status.phase}`
  $('stats').innerHTML =
    `<span>iteration ${status.iteration ?? '-'}</span>` +
    `<span>${(status.pct_labeled * 100).toFixed(1)}% labeled</span>` +
    `<span>accuracy ${status.test_accuracy === null ? '-' : (status.test_accuracy * 100).toFixed(1) + '%'}</span>` +
    `<span>&delta; ${status.delta.toFixed(4)}</span>` +
    `<span>${status.pseudo_count} pseudo (err ${(status.pseudo_error_rate * 100).toFixed(1)}%)</span>`
  $('stale-banner').style.display = state.stale ? 'block' : 'none'
}

function render(state: ControllerState): void {
  renderBatch(state)
  renderProgress(state)
  if (state.lastError) {
    $('error-banner').textContent = state.lastError
    $('error-banner').style.display = 'block'
  } else {
    $('error-banner').style.display = 'none'
  }
}

async function startSession(): Promise<void> {
  const querySize = Number((<HTMLInputElement>$('query-size')).value) || 10
  const created = await api.createSession({ ceal: { query_size: querySize } })
  classNames =
    created.class_names ??
    Array.from({ length: created.class_count }, (_, i) => `class ${i}`)
  controller = new SessionController(api, created.session_id, created.class_count, render)
  $('setup').style.display = 'none'
  $('workspace').style.display = 'block'
  renderPalette()
  await controller.refresh()
  if (pollTimer !== undefined) clearInterval(pollTimer)
  pollTimer = window.setInterval(() => {
    if (!controller) return
    const busy = controller.state.submitting
    if (!busy) void controller.refresh()
  }, POLL_INTERVAL_MS)
}

function bindGlobalKeys(): void {
  document.addEventListener('keydown', (event) => {
    if (!controller || !controller.batch) return
    const cls = classForKey(event.key, classNames.length)
    if (cls !== null) {
      controller.assignAtCursor(cls)
      return
    }
    if (event.key === 'ArrowRight') controller.batch.moveCursor(1)
    if (event.key === 'ArrowLeft') controller.batch.moveCursor(-1)
    if (event.key === 'Enter' && controller.canSubmit) void controller.submit()
    render(controller.state)
  })
}

function init(): void {
  $('start').addEventListener('click', () => void startSession())
  $('submit').addEventListener('click', () => void controller?.submit())
  bindGlobalKeys()
}

document.addEventListener('DOMContentLoaded', init)
