// Reducer unit behavior: ordering, decimation limits, latest-wins panels.

import { describe, expect, it } from 'vitest'

import { TRACK_LIMIT, flattenAnalytics, initialState, reduce } from '../src/state'
import { fitViewport, histogramBars, project, sharpnessShades } from '../src/render'
import type { PoseEvent } from '../src/types'

function pose(t: number, lat = 64.9, lon = -147.6): PoseEvent {
    return { t, lat_deg: lat, lon_deg: lon, alt_m: 150, q_wxyz: [1, 0, 0, 0], status: 3 }
}

describe('reducer', () => {
    it('keeps the newest pose when telemetry arrives out of order', () => {
        let state = initialState()
        state = reduce(state, { topic: 'pose', data: pose(10.0) }, 0.1)
        state = reduce(state, { topic: 'pose', data: pose(12.0, 64.95) }, 0.2)
        state = reduce(state, { topic: 'pose', data: pose(11.0) }, 0.3)
        expect(state.latestPose?.t).toBe(12.0)
        expect(state.track.length).toBe(3)
    })

    it('caps the trail length', () => {
        let state = initialState()
        for (let i = 0; i < TRACK_LIMIT + 50; i++) {
            state = reduce(state, { topic: 'pose', data: pose(i) }, i * 0.01)
        }
        expect(state.track.length).toBe(TRACK_LIMIT)
        expect(state.track[0].t).toBe(50)
    })

    it('replaces analytics for a repeated image id without duplication', () => {
        const feature = (id: string) => ({
            type: 'Feature' as const,
            geometry: { type: 'Polygon' as const, coordinates: [[[0, 0], [1, 0], [1, 1], [0, 0]]] },
            properties: { class_id: 1, image_id: id },
        })
        let state = initialState()
        const ev = {
            topic: 'analytics' as const,
            data: {
                image_id: 'a', t: 1, seq: 0, classes: [1], polygons: 1,
                encoded_bytes: 10, features: [feature('a')],
            },
        }
        state = reduce(state, ev, 0.1)
        state = reduce(state, ev, 0.2)
        expect(flattenAnalytics(state).length).toBe(1)
        expect(state.analyticsOrder).toStrictEqual(['a'])
    })

    it('merges diagnostics keys', () => {
        let state = initialState()
        state = reduce(state, { topic: 'diagnostics', data: { cpu: 0.5 } }, 0.1)
        state = reduce(state, { topic: 'diagnostics', data: { uptime_s: 12 } }, 0.2)
        expect(state.diagnostics).toStrictEqual({ cpu: 0.5, uptime_s: 12 })
    })
})

describe('render helpers', () => {
    it('projection keeps data inside the canvas and preserves orientation', () => {
        const vp = { lonMin: -147.7, lonMax: -147.5, latMin: 64.8, latMax: 65.0 }
        const [x0, y0] = project(-147.7, 64.8, vp, 100, 100)
        const [x1, y1] = project(-147.5, 65.0, vp, 100, 100)
        expect(x0).toBeCloseTo(0)
        expect(y0).toBeCloseTo(100)
        expect(x1).toBeGreaterThan(x0)
        expect(y1).toBeLessThan(y0) // north is up
    })

    it('fitViewport is null with no data', () => {
        expect(fitViewport([], [])).toBeNull()
    })

    it('histogram bars normalize to the peak', () => {
        const bars = histogramBars([0, 5, 10], 100)
        expect(bars).toStrictEqual([0, 50, 100])
    })

    it('sharpness shades normalize to the sharpest tile', () => {
        expect(sharpnessShades([[0, 2], [4, 1]])).toStrictEqual([[0, 0.5], [1, 0.25]])
    })

    it('sharpness shades of an all-zero grid stay zero', () => {
        expect(sharpnessShades([[0, 0]])).toStrictEqual([[0, 0]])
    })
})
