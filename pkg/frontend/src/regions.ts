import { listRegions } from './api'
import type { RegionEntry } from './types'

export type RegionListHandlers = {
  onSelect: (region: RegionEntry) => void
}

/** Region browser: rows with statuses; only ready regions are selectable. */
export class RegionBrowser {
  private container: HTMLElement
  private baseUrl: string
  private handlers: RegionListHandlers
  regions: RegionEntry[] = []

  constructor(container: HTMLElement, baseUrl: string, handlers: RegionListHandlers) {
    this.container = container
    this.baseUrl = baseUrl
    this.handlers = handlers
  }

  async refresh(): Promise<void> {
    try {
      this.regions = await listRegions(this.baseUrl)
    } catch (err) {
      this.renderError(err instanceof Error ? err.message : String(err))
      return
    }
    this.renderList()
  }

  private renderError(message: string): void {
    this.container.innerHTML = ''
    const banner = document.createElement('div')
    banner.className = 'banner error'
    banner.textContent = `Cannot reach the service: ${message} `
    const retry = document.createElement('button')
    retry.className = 'retry'
    retry.textContent = 'Retry'
    retry.addEventListener('click', () => void this.refresh())
    banner.appendChild(retry)
    this.container.appendChild(banner)
  }

  private renderList(): void {
    this.container.innerHTML = ''
    if (this.regions.length === 0) {
      const empty = document.createElement('div')
      empty.className = 'empty-state'
      empty.textContent = 'No regions yet. Ingest one with POST /regions or the CLI.'
      this.container.appendChild(empty)
      return
    }
    const list = document.createElement('ul')
    list.className = 'region-list'
    for (const region of this.regions) {
      const item = document.createElement('li')
      item.className = `region-row status-${region.status}`
      item.dataset.regionId = region.region_id
      const button = document.createElement('button')
      button.textContent = region.region_id
      button.disabled = region.status !== 'ready'
      button.addEventListener('click', () => this.handlers.onSelect(region))
      const status = document.createElement('span')
      status.className = 'status'
      status.textContent = region.status
      item.append(button, status)
      list.appendChild(item)
    }
    this.container.appendChild(list)
  }
}
