import { valueToCss } from './colormap'
import type { QueryResponse } from './types'

/**
 * Render a query response as a rows x cols grid of geographic rectangles.
 *
 * The container is treated as the mercator projection of the store bbox, so
 * equal-sized cells are exactly the store grid (no smoothing). A marker is
 * placed on the argmax cell.
 */
export function renderHeatmapGrid(
  container: HTMLElement,
  response: QueryResponse,
  opts: { opacity?: number; marker?: boolean } = {}
): void {
  const { rows, cols, values, argmax } = response
  container.innerHTML = ''
  container.classList.add('heatmap-grid')
  container.style.setProperty('--rows', String(rows))
  container.style.setProperty('--cols', String(cols))

  const grid = document.createElement('div')
  grid.className = 'cells'
  grid.style.display = 'grid'
  grid.style.gridTemplateRows = `repeat(${rows}, 1fr)`
  grid.style.gridTemplateColumns = `repeat(${cols}, 1fr)`
  grid.style.opacity = String(opts.opacity ?? 1)
  for (let i = 0; i < rows * cols; i++) {
    const cell = document.createElement('div')
    cell.className = 'cell'
    cell.dataset.row = String(Math.floor(i / cols))
    cell.dataset.col = String(i % cols)
    cell.dataset.value = String(values[i])
    cell.style.backgroundColor = valueToCss(values[i])
    cell.title = `(${cell.dataset.row}, ${cell.dataset.col}) = ${values[i].toFixed(3)}`
    grid.appendChild(cell)
  }
  container.appendChild(grid)

  if (opts.marker !== false) {
    const marker = document.createElement('div')
    marker.className = 'argmax-marker'
    marker.dataset.row = String(argmax.row)
    marker.dataset.col = String(argmax.col)
    marker.style.position = 'absolute'
    marker.style.left = `${(((argmax.col + 0.5) / cols) * 100).toFixed(4)}%`
    marker.style.top = `${(((argmax.row + 0.5) / rows) * 100).toFixed(4)}%`
    marker.title = `argmax @ ${argmax.lat.toFixed(5)}, ${argmax.lon.toFixed(5)}`
    container.appendChild(marker)
  }
}

export function bboxLabel(bbox: [number, number, number, number]): string {
  const [minLat, minLon, maxLat, maxLon] = bbox
  return `${minLat.toFixed(4)}, ${minLon.toFixed(4)} to ${maxLat.toFixed(4)}, ${maxLon.toFixed(4)}`
}
