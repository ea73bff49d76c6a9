// Pose entry for humans: position sliders plus yaw/pitch/roll in degrees,
// converted to the wire's unit quaternion [qx, qy, qz, qw].
// Convention: right-handed, +Y up, -Z forward; intrinsic yaw (Y axis),
// then pitch (X axis), then roll (Z axis).

export type Quaternion = [number, number, number, number];

export interface PoseState {
  x: number;
  y: number;
  z: number;
  yawDeg: number;
  pitchDeg: number;
  rollDeg: number;
}

export const POSE_DEFAULTS: PoseState = { x: 0, y: 0, z: 0, yawDeg: 0, pitchDeg: 0, rollDeg: 0 };
export const POSITION_RANGE_M = 5; // sliders cover [-5, 5] meters

function multiply(a: Quaternion, b: Quaternion): Quaternion {
  const [ax, ay, az, aw] = a;
  const [bx, by, bz, bw] = b;
  return [
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
    aw * bw - ax * bx - ay * by - az * bz,
  ];
}

export function quaternionNorm(q: Quaternion): number {
  return Math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
}

export function normalize(q: Quaternion): Quaternion {
  const n = quaternionNorm(q);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function eulerToQuaternion(yawDeg: number, pitchDeg: number, rollDeg: number): Quaternion {
  const rad = Math.PI / 180;
  const y = (yawDeg * rad) / 2;
  const p = (pitchDeg * rad) / 2;
  const r = (rollDeg * rad) / 2;
  const qYaw: Quaternion = [0, Math.sin(y), 0, Math.cos(y)];
  const qPitch: Quaternion = [Math.sin(p), 0, 0, Math.cos(p)];
  const qRoll: Quaternion = [0, 0, Math.sin(r), Math.cos(r)];
  // normalized on send so the wire invariant (norm within 1e-6) always holds
  return normalize(multiply(multiply(qYaw, qPitch), qRoll));
}

export function poseResultValue(pose: PoseState): {
  position: [number, number, number];
  orientation: Quaternion;
} {
  return {
    position: [pose.x, pose.y, pose.z],
    orientation: eulerToQuaternion(pose.yawDeg, pose.pitchDeg, pose.rollDeg),
  };
}
