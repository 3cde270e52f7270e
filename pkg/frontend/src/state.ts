// Console state and the single reducer every stream event funnels through.
// The reducer is pure: (state, event, arrivalTime) -> state. All staleness
// judgments use the arrival clock, so replayed missions behave like live
// ones at any speed factor.

import type {
    AnalyticsEvent,
    CommandEvent,
    DiagnosticsEvent,
    GeoFeature,
    HistogramEvent,
    PoseEvent,
    SharpnessEvent,
    StreamEvent,
    ThumbnailEvent,
} from './types'

export const STALE_AFTER_S = 3.0
export const TRACK_LIMIT = 5000

export interface LayerToggles {
    track: boolean
    footprints: boolean
    analytics: boolean
    thumbnails: boolean
}

export interface CommandPanelState {
    seq: number
    status: 'pending' | 'acked' | 'timeout'
    requestedValueUs: number
    appliedValueUs: number | null
}

export interface ConsoleState {
    mission: string | null
    mode: 'live' | 'replay'
    layers: LayerToggles
    track: PoseEvent[]
    latestPose: PoseEvent | null
    analytics: Record<string, GeoFeature[]>
    analyticsOrder: string[]
    histogram: HistogramEvent | null
    sharpness: SharpnessEvent | null
    thumbnail: ThumbnailEvent | null
    diagnostics: DiagnosticsEvent
    commands: Record<number, CommandPanelState>
    lastEventAt: number | null
    eventCount: number
}

export function initialState(mission: string | null = null, mode: 'live' | 'replay' = 'live'): ConsoleState {
    return {
        mission,
        mode,
        layers: { track: true, footprints: false, analytics: true, thumbnails: true },
        track: [],
        latestPose: null,
        analytics: {},
        analyticsOrder: [],
        histogram: null,
        sharpness: null,
        thumbnail: null,
        diagnostics: {},
        commands: {},
        lastEventAt: null,
        eventCount: 0,
    }
}

export function reduce(state: ConsoleState, event: StreamEvent, at: number): ConsoleState {
    const next: ConsoleState = { ...state, lastEventAt: at, eventCount: state.eventCount + 1 }
    switch (event.topic) {
        case 'pose': {
            const pose = event.data as PoseEvent
            if (next.latestPose === null || pose.t >= next.latestPose.t) {
                next.latestPose = pose
            }
            const track = state.track.length >= TRACK_LIMIT ? state.track.slice(1) : state.track.slice()
            track.push(pose)
            next.track = track
            break
        }
        case 'analytics': {
            const a = event.data as AnalyticsEvent
            const analytics = { ...state.analytics }
            const order = state.analyticsOrder.slice()
            if (!(a.image_id in analytics)) {
                order.push(a.image_id)
            }
            analytics[a.image_id] = a.features
            next.analytics = analytics
            next.analyticsOrder = order
            break
        }
        case 'histogram':
            next.histogram = event.data as HistogramEvent
            break
        case 'sharpness':
            next.sharpness = event.data as SharpnessEvent
            break
        case 'thumbnail':
            next.thumbnail = event.data as ThumbnailEvent
            break
        case 'diagnostics':
            next.diagnostics = { ...state.diagnostics, ...(event.data as DiagnosticsEvent) }
            break
        case 'command': {
            const c = event.data as CommandEvent
            const existing = state.commands[c.seq]
            next.commands = {
                ...state.commands,
                [c.seq]: {
                    seq: c.seq,
                    status: c.status,
                    requestedValueUs: existing?.requestedValueUs ?? c.value_us ?? 0,
                    appliedValueUs: c.status === 'acked' ? c.value_us ?? null : existing?.appliedValueUs ?? null,
                },
            }
            break
        }
        case 'link':
            break
    }
    return next
}

export interface Staleness {
    stale: boolean
    ageS: number
}

// Stream-loss banner: no events for STALE_AFTER_S means the link (or the
// station) went quiet; the banner shows the age and the client keeps
// reconnecting underneath.
export function staleness(state: ConsoleState, now: number): Staleness {
    if (state.lastEventAt === null) {
        return { stale: true, ageS: now >= 0 ? now : 0 }
    }
    const age = now - state.lastEventAt
    return { stale: age > STALE_AFTER_S, ageS: Math.max(0, age) }
}

// Flatten received analytics in arrival order; the map draws exactly this,
// and it must match the mission export feature-for-feature.
export function flattenAnalytics(state: ConsoleState): GeoFeature[] {
    const out: GeoFeature[] = []
    for (const imageId of state.analyticsOrder) {
        for (const feature of state.analytics[imageId] ?? []) {
            out.push(feature)
        }
    }
    return out
}
