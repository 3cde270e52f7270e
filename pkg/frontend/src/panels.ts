// DOM panels. Thin layer over the pure helpers in render.ts; each panel
// re-renders from the current ConsoleState.

import type { ConsoleState } from './state'
import { flattenAnalytics, staleness } from './state'
import {
    classColor,
    fitViewport,
    histogramBars,
    polygonPaths,
    project,
    sharpnessShades,
    trackPath,
} from './render'

export interface TileConfig {
    // Slippy template like https://tiles.example/{z}/{x}/{y}.png; empty
    // string disables the base layer (polygons and track still draw).
    urlTemplate: string
}

export function drawMap(canvas: HTMLCanvasElement, state: ConsoleState): void {
    const ctx = canvas.getContext('2d')
    if (!ctx) return
    const { width, height } = canvas
    ctx.fillStyle = '#10141a'
    ctx.fillRect(0, 0, width, height)
    const features = state.layers.analytics ? flattenAnalytics(state) : []
    const vp = fitViewport(flattenAnalytics(state), state.track)
    if (!vp) return
    for (const poly of polygonPaths(features, vp, width, height)) {
        ctx.beginPath()
        for (const ring of poly.rings) {
            ring.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)))
            ctx.closePath()
        }
        ctx.fillStyle = classColor(poly.classId) + '55'
        ctx.strokeStyle = classColor(poly.classId)
        ctx.fill('evenodd')
        ctx.stroke()
    }
    if (state.layers.track && state.track.length > 1) {
        ctx.beginPath()
        trackPath(state.track, vp, width, height).forEach(([x, y], i) =>
            i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y),
        )
        ctx.strokeStyle = '#e8e8e8'
        ctx.lineWidth = 1.5
        ctx.stroke()
    }
    if (state.latestPose) {
        const [x, y] = project(state.latestPose.lon_deg, state.latestPose.lat_deg, vp, width, height)
        ctx.beginPath()
        ctx.arc(x, y, 5, 0, 2 * Math.PI)
        ctx.fillStyle = '#ff3355'
        ctx.fill()
    }
}

export function drawHistogram(canvas: HTMLCanvasElement, state: ConsoleState): void {
    const ctx = canvas.getContext('2d')
    if (!ctx) return
    ctx.fillStyle = '#10141a'
    ctx.fillRect(0, 0, canvas.width, canvas.height)
    if (!state.histogram) return
    const bars = histogramBars(state.histogram.bins, canvas.height - 14)
    const w = canvas.width / bars.length
    ctx.fillStyle = '#9ad1ff'
    bars.forEach((h, i) => ctx.fillRect(i * w, canvas.height - h, Math.max(1, w - 0.5), h))
    ctx.fillStyle = '#ccc'
    ctx.font = '11px sans-serif'
    ctx.fillText(`exposure ${state.histogram.exposure_us.toFixed(0)} us`, 4, 11)
}

export function drawSharpness(canvas: HTMLCanvasElement, state: ConsoleState): void {
    const ctx = canvas.getContext('2d')
    if (!ctx) return
    ctx.fillStyle = '#10141a'
    ctx.fillRect(0, 0, canvas.width, canvas.height)
    if (!state.sharpness) return
    const shades = sharpnessShades(state.sharpness.tile_grid)
    const rows = shades.length
    const cols = shades[0]?.length ?? 0
    const cw = canvas.width / Math.max(1, cols)
    const ch = (canvas.height - 14) / Math.max(1, rows)
    shades.forEach((row, r) =>
        row.forEach((v, c) => {
            const g = Math.round(40 + v * 200)
            ctx.fillStyle = `rgb(${g},${g},40)`
            ctx.fillRect(c * cw, 14 + r * ch, cw - 1, ch - 1)
        }),
    )
    ctx.fillStyle = '#ccc'
    ctx.font = '11px sans-serif'
    ctx.fillText(`global ${state.sharpness.global_score.toFixed(1)}`, 4, 11)
}

export function renderThumbnail(img: HTMLImageElement, state: ConsoleState): void {
    if (state.thumbnail?.jpeg_b64) {
        img.src = `data:image/jpeg;base64,${state.thumbnail.jpeg_b64}`
        img.alt = state.thumbnail.image_id
    }
}

export function renderDiagnostics(el: HTMLElement, state: ConsoleState): void {
    // Whatever key/value pairs arrive in diagnostics messages, no schema.
    const rows = Object.entries(state.diagnostics)
        .map(([k, v]) => `<tr><td>${k}</td><td>${String(v)}</td></tr>`)
        .join('')
    el.innerHTML = `<table>${rows}</table>`
}

export function renderStaleBanner(el: HTMLElement, state: ConsoleState, nowSeconds: number): void {
    const s = staleness(state, nowSeconds)
    el.style.display = s.stale ? 'block' : 'none'
    if (s.stale) {
        el.textContent = `stream stale: ${s.ageS.toFixed(0)} s since last event (reconnecting)`
    }
}

export function renderCommandPanel(el: HTMLElement, state: ConsoleState): void {
    const items = Object.values(state.commands)
        .sort((a, b) => a.seq - b.seq)
        .map((c) => {
            const badge =
                c.status === 'acked'
                    ? `<span class="badge acked">acked ${c.appliedValueUs ?? ''} us</span>`
                    : c.status === 'timeout'
                      ? '<span class="badge timeout">timeout</span>'
                      : '<span class="badge pending">pending</span>'
            return `<li>cmd ${c.seq}: set max exposure ${c.requestedValueUs} us ${badge}</li>`
        })
        .join('')
    el.innerHTML = `<ul>${items}</ul>`
}
