/** Camera capture with graceful degradation: when no camera is available
 * (no mediaDevices, or permission denied), the control falls back to a
 * plain file upload. */

export interface CameraEnv {
  mediaDevices?: {
    getUserMedia(constraints: { video: boolean }): Promise<unknown>;
  };
}

export type CaptureMode = "camera" | "upload";

export interface CameraControl {
  mode: CaptureMode;
  stream: unknown | null;
}

export async function createCameraControl(env: CameraEnv): Promise<CameraControl> {
  if (!env.mediaDevices) {
    return { mode: "upload", stream: null };
  }
  try {
    const stream = await env.mediaDevices.getUserMedia({ video: true });
    return { mode: "camera", stream };
  } catch {
    return { mode: "upload", stream: null };
  }
}
