import { renderHeatmapGrid } from './overlay'
import type { QueryResponse, Snapshot } from './types'

export const MAX_PINNED = 2

export function snapshotLabel(response: QueryResponse): string {
  const meta = response.meta
  const temporal = meta ? ` @ month ${meta.month}, hour ${meta.hour}` : ''
  return `"${response.query}"${temporal}`
}

/**
 * Side-by-side pinned panels. Snapshots are immutable: rendering a pin reuses
 * the stored response and never issues a request.
 */
export class ComparePanel {
  private container: HTMLElement
  pinned: Snapshot[] = []

  constructor(container: HTMLElement) {
    this.container = container
  }

  pin(response: QueryResponse): boolean {
    if (this.pinned.length >= MAX_PINNED) return false
    this.pinned.push({ label: snapshotLabel(response), response })
    this.render()
    return true
  }

  unpin(index: number): void {
    this.pinned.splice(index, 1)
    this.render()
  }

  render(): void {
    this.container.innerHTML = ''
    this.pinned.forEach((snapshot, index) => {
      const panel = document.createElement('div')
      panel.className = 'pinned-panel'
      const label = document.createElement('div')
      label.className = 'pinned-label'
      label.textContent = snapshot.label
      const unpin = document.createElement('button')
      unpin.className = 'unpin'
      unpin.textContent = 'unpin'
      unpin.addEventListener('click', () => this.unpin(index))
      const view = document.createElement('div')
      view.className = 'overlay-view'
      view.style.position = 'relative'
      renderHeatmapGrid(view, snapshot.response)
      panel.append(label, unpin, view)
      this.container.appendChild(panel)
    })
  }
}
