// Mirrors the service's documented colormap: value 0 is fully transparent,
// values in [0.5, 1] interpolate per-channel between LOW at 0.5 and HIGH at 1.
export const LOW_COLOR: readonly [number, number, number, number] = [33, 102, 172, 140]
export const HIGH_COLOR: readonly [number, number, number, number] = [178, 24, 43, 230]

export type Rgba = [number, number, number, number]

export function valueToRgba(value: number): Rgba {
  if (value <= 0) return [0, 0, 0, 0]
  const clamped = Math.min(Math.max(value, 0.5), 1)
  const t = (clamped - 0.5) / 0.5
  return [0, 1, 2, 3].map((i) => Math.round(LOW_COLOR[i] + (HIGH_COLOR[i] - LOW_COLOR[i]) * t)) as Rgba
}

export function valueToCss(value: number): string {
  const [r, g, b, a] = valueToRgba(value)
  if (a === 0) return 'transparent'
  return `rgba(${r}, ${g}, ${b}, ${(a / 255).toFixed(3)})`
}
