// Replay acceptance: feeding the blackout-fixture mission stream through
// the reducer must leave the map drawing the full polygon set, matching
// the station's export.geojson vertex for vertex.

import { describe, expect, it } from 'vitest'

import { flattenAnalytics, initialState, reduce } from '../src/state'
import { fitViewport, polygonPaths } from '../src/render'
import { asStreamEvent, loadFixture } from './fixture'

describe('analytics polygons', () => {
    it('match export.geojson vertex-for-vertex after full replay', () => {
        const fixture = loadFixture()
        let state = initialState('fixture', 'replay')
        for (const ev of fixture.events) {
            state = reduce(state, asStreamEvent(ev), ev.at)
        }
        const drawn = flattenAnalytics(state)
        const exported = fixture.export.features
        expect(drawn.length).toBe(exported.length)
        // Group by image to make ordering differences irrelevant.
        const key = (f: (typeof drawn)[number], i: number) =>
            `${f.properties.image_id}#${f.properties.class_id}#${i}`
        const byImage = (feats: typeof drawn) => {
            const map = new Map<string, number[][][]>()
            const counters = new Map<string, number>()
            for (const f of feats) {
                const base = `${f.properties.image_id}#${f.properties.class_id}`
                const n = counters.get(base) ?? 0
                counters.set(base, n + 1)
                map.set(`${base}#${n}`, f.geometry.coordinates)
            }
            return map
        }
        const drawnMap = byImage(drawn)
        const exportMap = byImage(exported)
        expect(drawnMap.size).toBe(exportMap.size)
        for (const [k, coords] of exportMap) {
            expect(drawnMap.has(k), `missing feature ${k}`).toBe(true)
            // Vertex-for-vertex, exact values: both sides came through the
            // same JSON payloads untouched.
            expect(drawnMap.get(k)).toStrictEqual(coords)
        }
        void key
    })

    it('arrive incrementally during the replay', () => {
        const fixture = loadFixture()
        let state = initialState()
        const counts: number[] = []
        for (const ev of fixture.events) {
            state = reduce(state, asStreamEvent(ev), ev.at)
            if (ev.topic === 'analytics') counts.push(flattenAnalytics(state).length)
        }
        for (let i = 1; i < counts.length; i++) {
            expect(counts[i]).toBeGreaterThanOrEqual(counts[i - 1])
        }
        expect(counts[counts.length - 1]).toBe(fixture.export.features.length)
    })

    it('project onto the canvas without degenerate paths', () => {
        const fixture = loadFixture()
        let state = initialState()
        for (const ev of fixture.events) {
            state = reduce(state, asStreamEvent(ev), ev.at)
        }
        const features = flattenAnalytics(state)
        const vp = fitViewport(features, state.track)
        expect(vp).not.toBeNull()
        const paths = polygonPaths(features, vp!, 900, 640)
        expect(paths.length).toBe(features.length)
        for (const p of paths) {
            for (const ring of p.rings) {
                expect(ring.length).toBeGreaterThanOrEqual(4)
                for (const [x, y] of ring) {
                    expect(Number.isFinite(x)).toBe(true)
                    expect(Number.isFinite(y)).toBe(true)
                    expect(x).toBeGreaterThanOrEqual(-1)
                    expect(x).toBeLessThanOrEqual(901)
                    expect(y).toBeGreaterThanOrEqual(-1)
                    expect(y).toBeLessThanOrEqual(641)
                }
            }
        }
    })
})
