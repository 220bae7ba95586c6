// Pure state for labeling one query batch: selections accumulate locally
// and the submission map is only available once every item has a class.

import type { BatchItem, LabelSubmission } from './api.js'

export class BatchLabeler {
  private readonly selections = new Map<number, number>()
  private cursorIndex = 0

  constructor(
    readonly items: BatchItem[],
    readonly classCount: number,
  ) {
    // labels the server already accepted (partial earlier submissions)
    for (const item of items) {
      if (item.label !== null) this.selections.set(item.sample_id, item.label)
    }
    this.cursorIndex = this.firstUnlabeledIndex()
  }

  private firstUnlabeledIndex(): number {
    const i = this.items.findIndex((it) => !this.selections.has(it.sample_id))
    return i === -1 ? this.items.length - 1 : i
  }

  get cursor(): BatchItem | undefined {
    return this.items[this.cursorIndex]
  }

  moveCursor(delta: number): void {
    if (this.items.length === 0) return
    const n = this.items.length
    this.cursorIndex = ((this.cursorIndex + delta) % n + n) % n
  }

  setCursor(sampleId: number): void {
    const i = this.items.findIndex((it) => it.sample_id === sampleId)
    if (i !== -1) this.cursorIndex = i
  }

  labelOf(sampleId: number): number | undefined {
    return this.selections.get(sampleId)
  }

  assign(sampleId: number, classIndex: number): void {
    if (classIndex < 0 || classIndex >= this.classCount) {
      throw new RangeError(`class ${classIndex} outside [0, ${this.classCount})`)
    }
    if (!this.items.some((it) => it.sample_id === sampleId)) {
      throw new RangeError(`sample ${sampleId} is not in this batch`)
    }
    this.selections.set(sampleId, classIndex)
  }

  // keyboard flow: label the focused item and advance to the next unlabeled one
  assignAtCursor(classIndex: number): void {
    const item = this.cursor
    if (!item) return
    this.assign(item.sample_id, classIndex)
    const next = this.items.findIndex(
      (it, i) => i > this.cursorIndex && !this.selections.has(it.sample_id),
    )
    this.cursorIndex = next !== -1 ? next : this.firstUnlabeledIndex()
  }

  get labeledCount(): number {
    return this.selections.size
  }

  get complete(): boolean {
    return this.items.length > 0 && this.selections.size === this.items.length
  }

  toSubmission(): LabelSubmission[] {
    if (!this.complete) {
      throw new Error('batch is not fully labeled')
    }
    return this.items.map((it) => ({
      sample_id: it.sample_id,
      label: this.selections.get(it.sample_id)!,
    }))
  }
}

// digit keys 1..9 map to the first nine classes
export function classForKey(key: string, classCount: number): number | null {
  if (!/^[1-9]$/.test(key)) return null
  const idx = Number(key) - 1
  return idx < classCount ? idx : null
}
