// The stale banner must be visible through the blackout gap and clear
// seamlessly when the stream resumes.

import { describe, expect, it } from 'vitest'

import { STALE_AFTER_S, initialState, reduce, staleness } from '../src/state'
import { asStreamEvent, loadFixture } from './fixture'

describe('stale banner', () => {
    it('raises during the blackout gap and clears on resume', () => {
        const fixture = loadFixture()
        const [gapStart, gapEnd] = fixture.blackout_window
        let state = initialState()
        // Play events up to the blackout start.
        let i = 0
        while (i < fixture.events.length && fixture.events[i].at < gapStart) {
            state = reduce(state, asStreamEvent(fixture.events[i]), fixture.events[i].at)
            i++
        }
        expect(state.lastEventAt).not.toBeNull()
        // Nothing arrives inside the gap; the banner raises once the age
        // crosses the threshold and the counter keeps growing.
        const probeA = staleness(state, gapStart + STALE_AFTER_S + 1.0)
        expect(probeA.stale).toBe(true)
        const probeB = staleness(state, gapStart + 20.0)
        expect(probeB.stale).toBe(true)
        expect(probeB.ageS).toBeGreaterThan(probeA.ageS)
        // There really was a silent stretch covering most of the window.
        const gapEvents = fixture.events.filter(
            (e) => e.at > gapStart + 1.0 && e.at < gapEnd - 1.0,
        )
        expect(gapEvents.length).toBe(0)
        // Resume: the first post-gap event clears the banner immediately.
        while (i < fixture.events.length && fixture.events[i].at <= gapEnd + 2.0) {
            state = reduce(state, asStreamEvent(fixture.events[i]), fixture.events[i].at)
            i++
        }
        const after = staleness(state, state.lastEventAt! + 0.5)
        expect(after.stale).toBe(false)
    })

    it('reports stale before any event arrives', () => {
        const state = initialState()
        expect(staleness(state, 10.0).stale).toBe(true)
    })

    it('stays fresh while events flow steadily', () => {
        const fixture = loadFixture()
        const [gapStart] = fixture.blackout_window
        let state = initialState()
        for (const ev of fixture.events) {
            if (ev.at >= gapStart - 2.0) break
            state = reduce(state, asStreamEvent(ev), ev.at)
            const s = staleness(state, ev.at + 0.2)
            expect(s.stale).toBe(false)
        }
    })
})
