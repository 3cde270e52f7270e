// Exposure command lifecycle: inline validation, pending badge after POST,
// acked badge carrying the applied value once the command event lands, and
// the diagnostics echo.

import { describe, expect, it } from 'vitest'

import { EXPOSURE_MAX_US, EXPOSURE_MIN_US, ExposureCommander, StationApi } from '../src/api'
import { initialState, reduce } from '../src/state'

function fakeFetch(
    handler: (url: string, init?: RequestInit) => { status: number; body: unknown },
) {
    const calls: { url: string; init?: RequestInit }[] = []
    const impl = async (url: string, init?: RequestInit): Promise<Response> => {
        calls.push({ url, init })
        const { status, body } = handler(url, init)
        return new Response(JSON.stringify(body), {
            status,
            headers: { 'content-type': 'application/json' },
        })
    }
    return { impl, calls }
}

describe('exposure command', () => {
    it('500 us round-trips to an acked badge with the applied value', async () => {
        const { impl, calls } = fakeFetch(() => ({
            status: 200,
            body: { seq: 0, status: 'pending', value_us: 500 },
        }))
        const commander = new ExposureCommander(new StationApi('http://station', impl))
        const attempt = await commander.send(500)
        expect(attempt.ok).toBe(true)
        expect(calls.length).toBe(1)
        expect(JSON.parse(String(calls[0].init?.body))).toStrictEqual({ value_us: 500 })

        let state = initialState()
        state = reduce(state, { topic: 'command', data: { seq: 0, status: 'pending', value_us: 500 } }, 1.0)
        expect(state.commands[0].status).toBe('pending')
        state = reduce(state, { topic: 'command', data: { seq: 0, status: 'acked', value_us: 500 } }, 2.0)
        expect(state.commands[0].status).toBe('acked')
        expect(state.commands[0].appliedValueUs).toBe(500)
        // Diagnostics echo the applied limit.
        state = reduce(state, { topic: 'diagnostics', data: { max_exposure_us: 500 } }, 3.0)
        expect(state.diagnostics['max_exposure_us']).toBe(500)
    })

    it('pending through a blackout, acked on restore', () => {
        let state = initialState()
        state = reduce(state, { topic: 'command', data: { seq: 3, status: 'pending', value_us: 750 } }, 10.0)
        expect(state.commands[3].status).toBe('pending')
        // Long silence, then the ack arrives after the link returns.
        state = reduce(state, { topic: 'command', data: { seq: 3, status: 'acked', value_us: 750 } }, 45.0)
        expect(state.commands[3].status).toBe('acked')
        expect(state.commands[3].appliedValueUs).toBe(750)
    })

    it('rejects out-of-range values inline without touching the network', async () => {
        const { impl, calls } = fakeFetch(() => ({ status: 200, body: {} }))
        const commander = new ExposureCommander(new StationApi('http://station', impl))
        for (const bad of [EXPOSURE_MIN_US - 1, EXPOSURE_MAX_US + 1, Number.NaN]) {
            const attempt = await commander.send(bad)
            expect(attempt.ok).toBe(false)
            expect(attempt.error).toBeTruthy()
        }
        expect(calls.length).toBe(0)
    })

    it('surfaces server rejection as an error', async () => {
        const { impl } = fakeFetch(() => ({ status: 422, body: { detail: 'out of range' } }))
        const commander = new ExposureCommander(new StationApi('http://station', impl))
        const attempt = await commander.send(500)
        expect(attempt.ok).toBe(false)
        expect(attempt.error).toContain('422')
    })

    it('timeout badge renders from a timeout event', () => {
        let state = initialState()
        state = reduce(state, { topic: 'command', data: { seq: 7, status: 'pending', value_us: 900 } }, 1.0)
        state = reduce(state, { topic: 'command', data: { seq: 7, status: 'timeout' } }, 95.0)
        expect(state.commands[7].status).toBe('timeout')
        expect(state.commands[7].requestedValueUs).toBe(900)
    })
})
