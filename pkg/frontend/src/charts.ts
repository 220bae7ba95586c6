// Minimal SVG line charts; values are rendered verbatim, never smoothed.

export type XY = { x: number; y: number }

export type ChartOptions = {
  width: number
  height: number
  pad: number
  yMin?: number
  yMax?: number
}

const DEFAULTS: ChartOptions = { width: 360, height: 160, pad: 24 }

export function scaleLinear(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain
  const [r0, r1] = range
  const span = d1 - d0
  return (v: number) => (span === 0 ? (r0 + r1) / 2 : r0 + ((v - d0) / span) * (r1 - r0))
}

export function linePath(points: XY[], opts: Partial<ChartOptions> = {}): string {
  const { width, height, pad, yMin, yMax } = { ...DEFAULTS, ...opts }
  if (points.length === 0) return ''
  const xs = points.map((p) => p.x)
  const ys = points.map((p) => p.y)
  const x = scaleLinear([Math.min(...xs), Math.max(...xs)], [pad, width - pad])
  const y = scaleLinear(
    [yMin ?? Math.min(...ys), yMax ?? Math.max(...ys)],
    [height - pad, pad],
  )
  return points
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${x(p.x).toFixed(1)},${y(p.y).toFixed(1)}`)
    .join(' ')
}

export function chartSvg(
  points: XY[],
  label: string,
  opts: Partial<ChartOptions> = {},
): string {
  const { width, height, pad } = { ...DEFAULTS, ...opts }
  const path = linePath(points, opts)
  const last = points[points.length - 1]
  const marker = last
    ? `<circle r="3" cx="${cx(points, opts)}" cy="${cy(points, opts)}" class="chart-dot"/>`
    : ''
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="chart" role="img" aria-label="${label}">` +
    `<rect x="${pad}" y="${pad}" width="${width - 2 * pad}" height="${height - 2 * pad}" class="chart-frame"/>` +
    (path ? `<path d="${path}" class="chart-line"/>` : '') +
    marker +
    `<text x="${pad}" y="${pad - 8}" class="chart-title">${label}</text>` +
    `</svg>`
  )
}

function cx(points: XY[], opts: Partial<ChartOptions>): string {
  const { width, pad } = { ...DEFAULTS, ...opts }
  const xs = points.map((p) => p.x)
  return scaleLinear([Math.min(...xs), Math.max(...xs)], [pad, width - pad])(
    points[points.length - 1].x,
  ).toFixed(1)
}

function cy(points: XY[], opts: Partial<ChartOptions>): string {
  const { height, pad, yMin, yMax } = { ...DEFAULTS, ...opts }
  const ys = points.map((p) => p.y)
  return scaleLinear(
    [yMin ?? Math.min(...ys), yMax ?? Math.max(...ys)],
    [height - pad, pad],
  )(points[points.length - 1].y).toFixed(1)
}

// smallest annotated fraction whose accuracy already meets the target,
// linearly interpolated between neighbouring points
export function annotatedFractionForTarget(
  curve: XY[],
  target: number,
): number | null {
  for (let i = 0; i < curve.length; i++) {
    if (curve[i].y >= target) {
      if (i === 0) return curve[0].x
      const prev = curve[i - 1]
      const frac = (target - prev.y) / (curve[i].y - prev.y)
      return prev.x + frac * (curve[i].x - prev.x)
    }
  }
  return null
}
