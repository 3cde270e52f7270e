// Pure geometry and drawing-list helpers, kept DOM-free so they are
// testable in node. The only client-side geodesy is the display
// projection: a local equirectangular fit of the data bounds.

import type { GeoFeature, PoseEvent } from './types'

export interface Viewport {
    lonMin: number
    lonMax: number
    latMin: number
    latMax: number
}

export function fitViewport(features: GeoFeature[], track: PoseEvent[], padFraction = 0.05): Viewport | null {
    let lonMin = Infinity
    let lonMax = -Infinity
    let latMin = Infinity
    let latMax = -Infinity
    const take = (lon: number, lat: number) => {
        lonMin = Math.min(lonMin, lon)
        lonMax = Math.max(lonMax, lon)
        latMin = Math.min(latMin, lat)
        latMax = Math.max(latMax, lat)
    }
    for (const f of features) {
        for (const ring of f.geometry.coordinates) {
            for (const [lon, lat] of ring) take(lon, lat)
        }
    }
    for (const p of track) take(p.lon_deg, p.lat_deg)
    if (!isFinite(lonMin)) return null
    const padLon = (lonMax - lonMin || 1e-6) * padFraction
    const padLat = (latMax - latMin || 1e-6) * padFraction
    return {
        lonMin: lonMin - padLon,
        lonMax: lonMax + padLon,
        latMin: latMin - padLat,
        latMax: latMax + padLat,
    }
}

// Equirectangular with the east axis scaled by cos(mid-latitude) so meters
// look square; y grows downward like canvas coordinates.
export function project(lon: number, lat: number, vp: Viewport, width: number, height: number): [number, number] {
    const midLat = (vp.latMin + vp.latMax) / 2
    const k = Math.cos((midLat * Math.PI) / 180)
    const spanLon = (vp.lonMax - vp.lonMin) * k
    const spanLat = vp.latMax - vp.latMin
    const scale = Math.min(width / spanLon, height / spanLat)
    const x = (lon - vp.lonMin) * k * scale
    const y = height - (lat - vp.latMin) * scale
    return [x, y]
}

export interface PolygonPath {
    imageId: string
    classId: number
    rings: [number, number][][]
}

export function polygonPaths(
    features: GeoFeature[],
    vp: Viewport,
    width: number,
    height: number,
): PolygonPath[] {
    return features.map((f) => ({
        imageId: f.properties.image_id,
        classId: f.properties.class_id,
        rings: f.geometry.coordinates.map((ring) =>
            ring.map(([lon, lat]) => project(lon, lat, vp, width, height)),
        ),
    }))
}

export function trackPath(track: PoseEvent[], vp: Viewport, width: number, height: number): [number, number][] {
    return track.map((p) => project(p.lon_deg, p.lat_deg, vp, width, height))
}

// Histogram bars normalized to the tallest bin; drawn client-side from the
// raw array in the stream payload.
export function histogramBars(bins: number[], height: number): number[] {
    const peak = Math.max(1, ...bins)
    return bins.map((b) => (b / peak) * height)
}

// Sharpness tiles shaded relative to the sharpest tile in this report.
export function sharpnessShades(grid: number[][]): number[][] {
    let peak = 0
    for (const row of grid) for (const v of row) peak = Math.max(peak, v)
    if (peak <= 0) return grid.map((row) => row.map(() => 0))
    return grid.map((row) => row.map((v) => v / peak))
}

export function classColor(classId: number): string {
    const palette = ['#3a86ff', '#8338ec', '#fb5607', '#ffbe0b', '#06d6a0']
    return palette[classId % palette.length]
}
