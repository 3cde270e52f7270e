// Payload shapes of the station API. Everything here mirrors the server's
// JSON verbatim: the console displays station data, it never re-derives it.

export interface PoseEvent {
    t: number
    lat_deg: number
    lon_deg: number
    alt_m: number
    q_wxyz: number[]
    status: number
}

export interface GeoFeature {
    type: 'Feature'
    geometry: { type: 'Polygon'; coordinates: number[][][] }
    properties: { class_id: number; image_id: string }
}

export interface AnalyticsEvent {
    image_id: string
    t: number
    seq: number
    classes: number[]
    polygons: number
    encoded_bytes: number
    features: GeoFeature[]
}

export interface HistogramEvent {
    t: number
    exposure_us: number
    bins: number[]
}

export interface SharpnessEvent {
    t: number
    global_score: number
    exposure_us: number
    tile_grid: number[][]
}

export interface ThumbnailEvent {
    t: number
    image_id: string
    jpeg_b64?: string
    bytes?: number
}

export interface CommandEvent {
    seq: number
    status: 'pending' | 'acked' | 'timeout'
    value_us?: number
}

export type DiagnosticsEvent = Record<string, unknown>

export type TopicName =
    | 'pose'
    | 'analytics'
    | 'histogram'
    | 'sharpness'
    | 'thumbnail'
    | 'diagnostics'
    | 'command'
    | 'link'

export interface StreamEvent {
    topic: TopicName
    data: unknown
}

export interface MissionSummary {
    id: string
    mission_id?: string
    analytics_committed?: number
    summary?: Record<string, unknown>
}
