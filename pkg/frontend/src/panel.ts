import { ApiError, queryRegion } from './api'
import { renderHeatmapGrid } from './overlay'
import type { QueryParams, QueryResponse } from './types'

/**
 * One query panel: owns at most one in-flight request; a newer submission
 * cancels the pending one. Errors render inline and never touch the inputs.
 */
export class QueryPanel {
  readonly root: HTMLElement
  private overlay: HTMLElement
  private status: HTMLElement
  private baseUrl: string
  private inflight: AbortController | null = null
  lastResponse: QueryResponse | null = null

  constructor(root: HTMLElement, baseUrl: string) {
    this.root = root
    this.baseUrl = baseUrl
    this.overlay = document.createElement('div')
    this.overlay.className = 'overlay-view'
    this.overlay.style.position = 'relative'
    this.status = document.createElement('div')
    this.status.className = 'panel-status'
    root.append(this.status, this.overlay)
  }

  async submit(regionId: string, params: QueryParams, opacity: number): Promise<QueryResponse | null> {
    if (this.inflight) this.inflight.abort()
    const controller = new AbortController()
    this.inflight = controller
    this.status.textContent = 'querying...'
    this.status.classList.remove('error')
    try {
      const response = await queryRegion(this.baseUrl, regionId, params, controller.signal)
      if (controller.signal.aborted) return null
      this.lastResponse = response
      renderHeatmapGrid(this.overlay, response, { opacity })
      this.status.textContent = `"${response.query}" over ${response.rows}x${response.cols} cells`
      return response
    } catch (err) {
      if (controller.signal.aborted) return null
      const detail =
        err instanceof ApiError ? `${err.status}: ${err.message}` : err instanceof Error ? err.message : String(err)
      this.status.textContent = `query failed (${detail})`
      this.status.classList.add('error')
      return null
    } finally {
      if (this.inflight === controller) this.inflight = null
    }
  }

  setOpacity(opacity: number): void {
    const cells = this.overlay.querySelector<HTMLElement>('.cells')
    if (cells) cells.style.opacity = String(opacity)
  }

  /** Display-only blur; the underlying cell values are untouched. */
  setSmoothing(enabled: boolean): void {
    this.overlay.classList.toggle('smoothed', enabled)
  }
}
