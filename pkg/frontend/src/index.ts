export {
  ProtocolError,
  SessionClient,
  TreeStore,
  bindSocket,
  type FetchLike,
  type GroupNode,
  type HullDelta,
  type HullPayload,
  type ObjectNode,
  type PlanFile,
  type PlanStepDoc,
  type PoseDoc,
  type PushMessage,
  type SessionInfo,
  type SocketLike,
  type TreeSnapshot,
  type VisibleHulls,
} from "./protocol.js";
export {
  cross,
  dot,
  hullContains,
  hullPlanes,
  norm,
  planesContain,
  sub,
  type Plane,
  type Vec3,
} from "./geometry.js";
export {
  hullStyle,
  renderSet,
  visibleHulls,
  type HullStyle,
  type RenderEntry,
} from "./visibility.js";
export {
  CursorPairTracker,
  resolvePick,
  toCursorEvent,
  type CursorEvent,
  type CursorSide,
  type DesktopEvent,
  type PickTarget,
  type RayHit,
  type SelectionMode,
} from "./cursors.js";
export {
  GestureRecognizer,
  type InputEvent,
  type ProtocolPort,
  type RecognizerOptions,
} from "./gestures.js";
export { PlanPlayback, type PlaybackFrame } from "./playback.js";
