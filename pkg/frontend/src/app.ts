import { createRegion } from './api'
import { ComparePanel } from './compare'
import { bboxLabel } from './overlay'
import { QueryPanel } from './panel'
import { RegionBrowser } from './regions'
import { initialViewState } from './types'
import type { RegionEntry } from './types'

const API_URL: string = import.meta.env?.VITE_API_URL ?? 'http://127.0.0.1:8765'

export function mountApp(root: HTMLElement, baseUrl: string = API_URL): void {
  root.innerHTML = `
    <header><h1>groundcast explorer</h1><span class="api-url">${baseUrl}</span></header>
    <main>
      <aside>
        <h2>Regions</h2>
        <div id="region-browser"></div>
        <details class="new-region">
          <summary>New region</summary>
          <input id="nr-name" type="text" placeholder="name" />
          <input id="nr-bbox" type="text" placeholder="min_lat,min_lon,max_lat,max_lon" />
          <input id="nr-zoom" type="number" value="15" min="0" max="22" />
          <button id="nr-submit">Ingest</button>
          <div id="nr-status"></div>
        </details>
      </aside>
      <section class="workbench">
        <div class="controls">
          <div id="region-label" class="region-label">no region selected</div>
          <input id="prompt" type="text" placeholder="e.g. cars stuck in traffic" />
          <button id="run" disabled>Query</button>
          <label class="meta-toggle">
            <input id="use-meta" type="checkbox" /> condition on date-time
          </label>
          <label>month <input id="month" type="range" min="1" max="12" value="7" disabled />
            <span id="month-value">7</span></label>
          <label>hour <input id="hour" type="range" min="0" max="23" value="12" disabled />
            <span id="hour-value">12</span></label>
          <label>opacity <input id="opacity" type="range" min="0" max="100" value="100" /></label>
          <label class="smooth-toggle"><input id="smooth" type="checkbox" /> smooth (display only)</label>
          <button id="pin" disabled>Pin for compare</button>
        </div>
        <div id="live-panel" class="panel"></div>
        <div id="compare" class="compare"></div>
      </section>
    </main>
  `
  const state = initialViewState()
  const promptInput = root.querySelector<HTMLInputElement>('#prompt')!
  const runButton = root.querySelector<HTMLButtonElement>('#run')!
  const useMetaBox = root.querySelector<HTMLInputElement>('#use-meta')!
  const monthSlider = root.querySelector<HTMLInputElement>('#month')!
  const hourSlider = root.querySelector<HTMLInputElement>('#hour')!
  const opacitySlider = root.querySelector<HTMLInputElement>('#opacity')!
  const pinButton = root.querySelector<HTMLButtonElement>('#pin')!
  const regionLabel = root.querySelector<HTMLElement>('#region-label')!

  const livePanel = new QueryPanel(root.querySelector<HTMLElement>('#live-panel')!, baseUrl)
  const compare = new ComparePanel(root.querySelector<HTMLElement>('#compare')!)

  const browser = new RegionBrowser(root.querySelector<HTMLElement>('#region-browser')!, baseUrl, {
    onSelect: (region: RegionEntry) => {
      state.regionId = region.region_id
      regionLabel.textContent = region.spec
        ? `${region.region_id} (${bboxLabel(region.spec.bbox)})`
        : region.region_id
      runButton.disabled = false
    },
  })
  void browser.refresh()

  async function runQuery(): Promise<void> {
    state.prompt = promptInput.value
    if (!state.regionId || !state.prompt.trim()) return
    const response = await livePanel.submit(
      state.regionId,
      {
        text: state.prompt,
        useMeta: state.useMeta,
        month: state.month,
        hour: state.hour,
      },
      state.opacity
    )
    if (response) {
      state.lastResponse = response
      pinButton.disabled = false
    }
  }

  runButton.addEventListener('click', () => void runQuery())
  promptInput.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') void runQuery()
  })

  useMetaBox.addEventListener('change', () => {
    state.useMeta = useMetaBox.checked
    monthSlider.disabled = !state.useMeta
    hourSlider.disabled = !state.useMeta
    if (state.lastResponse) void runQuery()
  })
  monthSlider.addEventListener('change', () => {
    state.month = Number(monthSlider.value)
    root.querySelector('#month-value')!.textContent = monthSlider.value
    if (state.useMeta && state.lastResponse) void runQuery()
  })
  hourSlider.addEventListener('change', () => {
    state.hour = Number(hourSlider.value)
    root.querySelector('#hour-value')!.textContent = hourSlider.value
    if (state.useMeta && state.lastResponse) void runQuery()
  })
  opacitySlider.addEventListener('input', () => {
    state.opacity = Number(opacitySlider.value) / 100
    livePanel.setOpacity(state.opacity)
  })
  root.querySelector<HTMLInputElement>('#smooth')!.addEventListener('change', (event) => {
    livePanel.setSmoothing((event.target as HTMLInputElement).checked)
  })
  pinButton.addEventListener('click', () => {
    if (state.lastResponse && compare.pin(state.lastResponse)) {
      state.pinned = compare.pinned
      if (compare.pinned.length >= 2) pinButton.disabled = true
    }
  })

  const newRegionStatus = root.querySelector<HTMLElement>('#nr-status')!
  root.querySelector<HTMLButtonElement>('#nr-submit')!.addEventListener('click', () => {
    void (async () => {
      const name = root.querySelector<HTMLInputElement>('#nr-name')!.value.trim()
      const bboxParts = root
        .querySelector<HTMLInputElement>('#nr-bbox')!
        .value.split(',')
        .map((v) => Number(v.trim()))
      const zoom = Number(root.querySelector<HTMLInputElement>('#nr-zoom')!.value)
      if (!name || bboxParts.length !== 4 || bboxParts.some((v) => Number.isNaN(v))) {
        newRegionStatus.textContent = 'need a name and four bbox numbers'
        return
      }
      try {
        const regionId = await createRegion(baseUrl, {
          name,
          bbox: bboxParts as [number, number, number, number],
          zoom,
        })
        newRegionStatus.textContent = `ingesting ${regionId}...`
        await browser.refresh()
      } catch (err) {
        newRegionStatus.textContent = err instanceof Error ? err.message : String(err)
      }
    })()
  })
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  mountApp(document.getElementById('app')!)
}
