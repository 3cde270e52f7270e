// Console bootstrap: wires the stream into the reducer and repaints panels.

import { ExposureCommander, StationApi } from './api'
import {
    drawHistogram,
    drawMap,
    drawSharpness,
    renderCommandPanel,
    renderDiagnostics,
    renderStaleBanner,
    renderThumbnail,
} from './panels'
import { initialState, reduce } from './state'
import { connectStream } from './stream'
import type { StreamEvent } from './types'

const BASE_URL = (window as unknown as { GEOSTREAM_BASE_URL?: string }).GEOSTREAM_BASE_URL ?? ''

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id)
    if (!node) throw new Error(`missing #${id}`)
    return node as T
}

async function boot() {
    const api = new StationApi(BASE_URL)
    const commander = new ExposureCommander(api)
    let state = initialState()

    const missions = await api.missions().catch(() => [])
    const missionSelect = el<HTMLSelectElement>('mission-select')
    for (const m of missions) {
        const opt = document.createElement('option')
        opt.value = m.id
        opt.textContent = m.id
        missionSelect.appendChild(opt)
    }
    if (missions.length > 0) {
        state = { ...state, mission: missions[0].id }
    }

    const repaint = () => {
        drawMap(el<HTMLCanvasElement>('map'), state)
        drawHistogram(el<HTMLCanvasElement>('histogram'), state)
        drawSharpness(el<HTMLCanvasElement>('sharpness'), state)
        renderThumbnail(el<HTMLImageElement>('thumbnail'), state)
        renderDiagnostics(el('diagnostics'), state)
        renderCommandPanel(el('commands'), state)
    }

    const dispatch = (event: StreamEvent, at: number) => {
        state = reduce(state, event, at)
        repaint()
    }
    connectStream(BASE_URL, dispatch)

    setInterval(() => renderStaleBanner(el('stale-banner'), state, Date.now() / 1000), 500)

    el<HTMLButtonElement>('exposure-send').addEventListener('click', async () => {
        const input = el<HTMLInputElement>('exposure-value')
        const errorBox = el('exposure-error')
        const attempt = await commander.send(Number(input.value))
        errorBox.textContent = attempt.ok ? '' : (attempt.error ?? 'failed')
    })

    for (const layer of ['track', 'analytics', 'thumbnails'] as const) {
        el<HTMLInputElement>(`layer-${layer}`).addEventListener('change', (ev) => {
            state = {
                ...state,
                layers: { ...state.layers, [layer]: (ev.target as HTMLInputElement).checked },
            }
            repaint()
        })
    }
}

boot().catch((err) => {
    document.body.insertAdjacentHTML('beforeend', `<pre class="fatal">${String(err)}</pre>`)
})
