import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest'
import { RegionBrowser } from '../src/regions'
import type { RegionEntry } from '../src/types'
import { BASE, flush, jsonResponse, mockFetch, regionEntry } from './helpers'

let container: HTMLElement

beforeEach(() => {
  container = document.createElement('div')
  document.body.appendChild(container)
})

afterEach(() => {
  container.remove()
  vi.unstubAllGlobals()
})

describe('RegionBrowser', () => {
  it('renders one row per region with its status; pending rows unselectable', async () => {
    mockFetch(() => jsonResponse([regionEntry('aaa'), regionEntry('bbb'), regionEntry('ccc', 'pending')]))
    const browser = new RegionBrowser(container, BASE, { onSelect: () => {} })
    await browser.refresh()
    const rows = container.querySelectorAll('.region-row')
    expect(rows).toHaveLength(3)
    const statuses = [...rows].map((r) => r.querySelector('.status')!.textContent)
    expect(statuses).toEqual(['ready', 'ready', 'pending'])
    const pendingButton = rows[2].querySelector('button')!
    expect(pendingButton.disabled).toBe(true)
    expect(rows[0].querySelector('button')!.disabled).toBe(false)
  })

  it('selecting a ready region hands its entry (with bbox) to the callback', async () => {
    mockFetch(() => jsonResponse([regionEntry('aaa')]))
    let selected: RegionEntry | null = null
    const browser = new RegionBrowser(container, BASE, { onSelect: (r) => (selected = r) })
    await browser.refresh()
    container.querySelector('button')!.click()
    expect(selected).not.toBeNull()
    expect(selected!.region_id).toBe('aaa')
    expect(selected!.spec!.bbox).toEqual([40.0, -75.0, 40.1, -74.9])
  })

  it('shows an empty-state message for an empty catalog', async () => {
    mockFetch(() => jsonResponse([]))
    const browser = new RegionBrowser(container, BASE, { onSelect: () => {} })
    await browser.refresh()
    expect(container.querySelector('.empty-state')).not.toBeNull()
  })

  it('shows a retry banner when the service is down, and retry refetches', async () => {
    let calls = 0
    mockFetch(() => {
      calls += 1
      if (calls === 1) throw new TypeError('fetch failed')
      return jsonResponse([regionEntry('aaa')])
    })
    const browser = new RegionBrowser(container, BASE, { onSelect: () => {} })
    await browser.refresh()
    const banner = container.querySelector('.banner.error')
    expect(banner).not.toBeNull()
    banner!.querySelector<HTMLButtonElement>('.retry')!.click()
    await flush()
    expect(container.querySelectorAll('.region-row')).toHaveLength(1)
    expect(calls).toBe(2)
  })
})
