// Payload shapes served by the map API.

export interface CircleShape {
  cx: number;
  cy: number;
  r: number;
}

export interface MapInstance {
  id: string;
  entityId: string;
  topicId: string;
  kind: "original" | "clone";
  tag: "direct" | "induced";
  circle: CircleShape;
}

export interface MapEdge {
  a: string;
  b: string;
  kind: "within_topic" | "between_topic" | "matching";
  weight: number;
}

export interface MapTopic {
  id: string;
  label: string;
  level: number;
  circle: CircleShape;
}

export interface ContourLine {
  points: [number, number][];
  closed: boolean;
}

export interface ColorScale {
  seaLevel: number;
  stops: [number, [number, number, number]][];
}

export interface MapPayload {
  depth: number;
  maxDepth: number;
  worldRadius: number;
  entityRadius: number;
  instances: MapInstance[];
  edges: MapEdge[];
  topics: MapTopic[];
  contours: { isoLevels: number[]; lines: ContourLine[][] };
  colorScale: ColorScale;
}

export interface EntityInstanceRef {
  id: string;
  level: number;
  topicId: string;
  kind: string;
  tag: string;
  circle: CircleShape;
}

export interface EntityDetail {
  id: string;
  title: string;
  abstract: string;
  authors: string[];
  year: number;
  venue: string | null;
  doi: string | null;
  url: string | null;
  concepts: string[];
  instances: EntityInstanceRef[];
}

export interface TopicHit {
  topicId: string;
  label: string;
  level: number;
  score: number;
}

export interface EntityHit {
  entityId: string;
  title: string;
  year: number;
  score: number;
}

export interface SearchResult {
  topics: TopicHit[];
  entities: EntityHit[];
}
