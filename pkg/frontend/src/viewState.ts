// Shareable view state: longitude/latitude/altitude codec and depth mapping.
// The fragment grammar mirrors the server's layout codec exactly:
// lon=<f6>&lat=<f6>&alt=<f6>, six decimals each.

export interface ViewState {
  lon: number; // degrees, [-180, 180]
  lat: number; // degrees, [-85, 85]
  alt: number; // zoom fraction, [0, 1]; 1 shows the whole world
}

export const LON_LIMIT = 180;
export const LAT_LIMIT = 85;

function checkRange(state: ViewState): void {
  if (!(state.lon >= -LON_LIMIT && state.lon <= LON_LIMIT)) {
    throw new Error(`lon ${state.lon} outside [-180, 180]`);
  }
  if (!(state.lat >= -LAT_LIMIT && state.lat <= LAT_LIMIT)) {
    throw new Error(`lat ${state.lat} outside [-85, 85]`);
  }
  if (!(state.alt >= 0 && state.alt <= 1)) {
    throw new Error(`alt ${state.alt} outside [0, 1]`);
  }
}

export function encodeView(state: ViewState): string {
  checkRange(state);
  const f = (v: number) => v.toFixed(6);
  return `lon=${f(state.lon)}&lat=${f(state.lat)}&alt=${f(state.alt)}`;
}

export function decodeView(fragment: string): ViewState {
  const cleaned = fragment.replace(/^#/, "");
  const values: Partial<Record<"lon" | "lat" | "alt", number>> = {};
  for (const part of cleaned.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) throw new Error(`malformed fragment part ${part}`);
    const key = part.slice(0, eq);
    if (key !== "lon" && key !== "lat" && key !== "alt") {
      throw new Error(`unexpected fragment key ${key}`);
    }
    if (values[key] !== undefined) throw new Error(`duplicate fragment key ${key}`);
    const value = Number(part.slice(eq + 1));
    if (!Number.isFinite(value) || part.slice(eq + 1).trim() === "") {
      throw new Error(`${key} value is not a number`);
    }
    values[key] = value;
  }
  if (values.lon === undefined || values.lat === undefined || values.alt === undefined) {
    throw new Error("fragment must contain lon, lat and alt");
  }
  const state = { lon: values.lon, lat: values.lat, alt: values.alt };
  checkRange(state);
  return state;
}

/** Display depth for an altitude: round((1 - alt) * maxDepth), clamped to [1, maxDepth]. */
export function displayDepth(alt: number, maxDepth: number): number {
  if (maxDepth < 1) return 1;
  const raw = Math.round((1 - alt) * maxDepth);
  return Math.min(Math.max(raw, 1), maxDepth);
}

/** World coordinates -> geographic degrees; the world circle spans full ranges. */
export function project(x: number, y: number, worldRadius: number): [number, number] {
  return [(LON_LIMIT * x) / worldRadius, (LAT_LIMIT * y) / worldRadius];
}

export function unproject(lon: number, lat: number, worldRadius: number): [number, number] {
  return [(lon * worldRadius) / LON_LIMIT, (lat * worldRadius) / LAT_LIMIT];
}
