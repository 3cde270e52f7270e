// REST calls and the exposure-command tracker. The tracker owns the
// request lifecycle: local range validation, POST, then resolution by
// `command` stream events.

import type { CommandEvent, MissionSummary } from './types'

export const EXPOSURE_MIN_US = 50
export const EXPOSURE_MAX_US = 20000

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class StationApi {
    constructor(
        private baseUrl: string,
        private fetchImpl: FetchLike = (...args) => fetch(...args),
    ) {}

    async missions(): Promise<MissionSummary[]> {
        const resp = await this.fetchImpl(`${this.baseUrl}/missions`)
        if (!resp.ok) throw new Error(`missions: HTTP ${resp.status}`)
        return (await resp.json()) as MissionSummary[]
    }

    async exportGeojson(missionId: string): Promise<unknown> {
        const resp = await this.fetchImpl(`${this.baseUrl}/missions/${missionId}/export.geojson`)
        if (!resp.ok) throw new Error(`export: HTTP ${resp.status}`)
        return await resp.json()
    }

    async postExposure(valueUs: number): Promise<CommandEvent> {
        const resp = await this.fetchImpl(`${this.baseUrl}/command/exposure`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ value_us: valueUs }),
        })
        if (!resp.ok) {
            const detail = await resp.text()
            throw new Error(`command rejected: HTTP ${resp.status} ${detail}`)
        }
        return (await resp.json()) as CommandEvent
    }
}

export interface CommandAttempt {
    ok: boolean
    seq?: number
    error?: string
}

export class ExposureCommander {
    constructor(private api: StationApi) {}

    validate(valueUs: number): string | null {
        if (!Number.isFinite(valueUs)) return 'exposure must be a number'
        if (valueUs < EXPOSURE_MIN_US || valueUs > EXPOSURE_MAX_US) {
            return `exposure must be within [${EXPOSURE_MIN_US}, ${EXPOSURE_MAX_US}] us`
        }
        return null
    }

    // Inline validation failures never reach the network.
    async send(valueUs: number): Promise<CommandAttempt> {
        const problem = this.validate(valueUs)
        if (problem !== null) return { ok: false, error: problem }
        try {
            const result = await this.api.postExposure(valueUs)
            return { ok: true, seq: result.seq }
        } catch (err) {
            return { ok: false, error: String(err) }
        }
    }
}
