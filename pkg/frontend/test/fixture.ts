import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import type { GeoFeature, StreamEvent, TopicName } from '../src/types'

export interface FixtureEvent {
    at: number
    topic: TopicName
    data: unknown
}

export interface MissionFixture {
    summary: Record<string, unknown>
    blackout_window: [number, number]
    export: { type: string; features: GeoFeature[] }
    report: Record<string, unknown>
    events: FixtureEvent[]
}

let cached: MissionFixture | null = null

export function loadFixture(): MissionFixture {
    if (cached === null) {
        const here = dirname(fileURLToPath(import.meta.url))
        const raw = readFileSync(join(here, 'fixtures', 'mission.json'), 'utf-8')
        cached = JSON.parse(raw) as MissionFixture
    }
    return cached
}

export function asStreamEvent(ev: FixtureEvent): StreamEvent {
    return { topic: ev.topic, data: ev.data }
}
