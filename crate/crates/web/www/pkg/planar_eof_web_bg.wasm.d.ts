/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flowdemo_free: (a: number, b: number) => void;
export const __wbg_ransacdemo_free: (a: number, b: number) => void;
export const blur_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const flow_demo: (a: number, b: number, c: number, d: number) => number;
export const flowdemo_arrows: (a: number) => [number, number];
export const flowdemo_est_dx: (a: number) => number;
export const flowdemo_est_dy: (a: number) => number;
export const flowdemo_est_yaw_deg: (a: number) => number;
export const flowdemo_gray: (a: number) => [number, number];
export const flowdemo_height: (a: number) => number;
export const flowdemo_mean_u: (a: number) => number;
export const flowdemo_mean_v: (a: number) => number;
export const flowdemo_valid_fraction: (a: number) => number;
export const flowdemo_width: (a: number) => number;
export const max_exposure_us: (a: number, b: number, c: number, d: number) => number;
export const ransac_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => number;
export const ransacdemo_n_inliers: (a: number) => number;
export const ransacdemo_plain: (a: number) => [number, number];
export const ransacdemo_points: (a: number) => [number, number];
export const ransacdemo_robust: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
