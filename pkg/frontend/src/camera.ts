// Camera: view state <-> screen transform, pan/zoom handling, fly-to animation.

import { LAT_LIMIT, LON_LIMIT, ViewState, unproject, project } from "./viewState.js";

/** Window shrink factor at full zoom-in (alt = 0). */
const MIN_WINDOW_RATIO = 1 / 64;

/** Fraction of the shorter viewport axis a fly-to target circle should fill. */
export const FLY_FILL_FRACTION = 0.8;

export interface Viewport {
  width: number;
  height: number;
}

/** Side length of the world-space window visible at a given altitude. */
export function windowForAltitude(alt: number, worldRadius: number): number {
  const clamped = Math.min(Math.max(alt, 0), 1);
  return 2 * worldRadius * Math.pow(MIN_WINDOW_RATIO, 1 - clamped);
}

/** Inverse of windowForAltitude, clamped into [0, 1]. */
export function altitudeForWindow(window: number, worldRadius: number): number {
  const ratio = window / (2 * worldRadius);
  const alt = 1 - Math.log(ratio) / Math.log(MIN_WINDOW_RATIO);
  return Math.min(Math.max(alt, 0), 1);
}

/**
 * Altitude that makes a circle fill ~80% of the shorter viewport axis.
 * Bigger circles (higher-level topics) yield higher altitudes.
 */
export function altitudeForCircle(radius: number, worldRadius: number): number {
  return altitudeForWindow((2 * radius) / FLY_FILL_FRACTION, worldRadius);
}

export function easeInOutCubic(t: number): number {
  return t < 0.5 ? 4 * t * t * t : 1 - Math.pow(-2 * t + 2, 3) / 2;
}

export interface FlyAnimation {
  from: ViewState;
  to: ViewState;
  durationMs: number;
}

/** Interpolated view along a fly animation at elapsed milliseconds. */
export function flyFrame(animation: FlyAnimation, elapsedMs: number): ViewState {
  const t = Math.min(Math.max(elapsedMs / animation.durationMs, 0), 1);
  if (t >= 1) return { ...animation.to }; // land exactly on the target
  const k = easeInOutCubic(t);
  const lerp = (a: number, b: number) => a + (b - a) * k;
  return {
    lon: lerp(animation.from.lon, animation.to.lon),
    lat: lerp(animation.from.lat, animation.to.lat),
    alt: lerp(animation.from.alt, animation.to.alt),
  };
}

export class Camera {
  view: ViewState = { lon: 0, lat: 0, alt: 1 };

  constructor(public worldRadius: number) {}

  /** World units per pixel at the current altitude. */
  scale(viewport: Viewport): number {
    const short = Math.min(viewport.width, viewport.height);
    return short / windowForAltitude(this.view.alt, this.worldRadius);
  }

  centreWorld(): [number, number] {
    return unproject(this.view.lon, this.view.lat, this.worldRadius);
  }

  worldToScreen(x: number, y: number, viewport: Viewport): [number, number] {
    const s = this.scale(viewport);
    const [cx, cy] = this.centreWorld();
    return [
      viewport.width / 2 + (x - cx) * s,
      viewport.height / 2 - (y - cy) * s,
    ];
  }

  screenToWorld(px: number, py: number, viewport: Viewport): [number, number] {
    const s = this.scale(viewport);
    const [cx, cy] = this.centreWorld();
    return [
      cx + (px - viewport.width / 2) / s,
      cy - (py - viewport.height / 2) / s,
    ];
  }

  private setCentreWorld(x: number, y: number): void {
    const [lon, lat] = project(x, y, this.worldRadius);
    this.view = {
      lon: Math.min(Math.max(lon, -LON_LIMIT), LON_LIMIT),
      lat: Math.min(Math.max(lat, -LAT_LIMIT), LAT_LIMIT),
      alt: this.view.alt,
    };
  }

  pan(dxPx: number, dyPx: number, viewport: Viewport): void {
    const s = this.scale(viewport);
    const [cx, cy] = this.centreWorld();
    this.setCentreWorld(cx - dxPx / s, cy + dyPx / s);
  }

  /** Wheel zoom keeping the world point under the cursor fixed. */
  zoomAt(deltaAlt: number, px: number, py: number, viewport: Viewport): void {
    const [wx, wy] = this.screenToWorld(px, py, viewport);
    this.view = {
      ...this.view,
      alt: Math.min(Math.max(this.view.alt + deltaAlt, 0), 1),
    };
    const [nx, ny] = this.screenToWorld(px, py, viewport);
    const [cx, cy] = this.centreWorld();
    this.setCentreWorld(cx + (wx - nx), cy + (wy - ny));
  }

  setAltitude(alt: number): void {
    this.view = { ...this.view, alt: Math.min(Math.max(alt, 0), 1) };
  }

  /** Target view centred on a circle, sized so it fills ~80% of the viewport. */
  flyTarget(circle: { cx: number; cy: number; r: number }): ViewState {
    const [lon, lat] = project(circle.cx, circle.cy, this.worldRadius);
    return {
      lon: Math.min(Math.max(lon, -LON_LIMIT), LON_LIMIT),
      lat: Math.min(Math.max(lat, -LAT_LIMIT), LAT_LIMIT),
      alt: altitudeForCircle(circle.r, this.worldRadius),
    };
  }
}
