/**
 * Bindings for the stalloc spatio-temporal compute allocator.
 *
 * Every operation marshals tensors through the LTV1 container and the
 * `stalloc` CLI rather than reimplementing any math, so results are
 * identical to the core's to the bit. Errors carry the core's stable
 * code strings (see errors.ts).
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { encodeLtv, decodeLtv } from "./ltv.js";
import { runStalloc, withTempDir } from "./runner.js";
import { fromHost, HostTensor, Shape4, TensorView } from "./tensor.js";

export { CoreError, DtypeMismatchError, NonContiguousInputError, ShapeMismatchError, StallocError } from "./errors.js";
export { encodeLtv, decodeLtv, LTV1_MAGIC } from "./ltv.js";
export { stallocBinary, runStalloc, withTempDir } from "./runner.js";
export { fromHost, rowMajorStrides, elementCount } from "./tensor.js";
export type { HostTensor, Shape4, TensorView } from "./tensor.js";

export type Grid3 = readonly [number, number, number];
export type RatioPair = readonly [number, number];

export interface DemandOptions {
  cutoff?: number;
  flowReg?: number;
  flowIters?: number;
  normSpatial?: RatioPair;
  normTemporal?: RatioPair;
  sharpness?: number;
}

export interface DemandProfile {
  d_s: number;
  d_t: number;
  m_s: number;
  m_t: number;
  raw_spatial: number;
  raw_temporal: number;
}

export interface PlanParams extends DemandOptions {
  frames: number;
  height: number;
  width: number;
  steps: number;
  budget?: number;
  tolerance?: number;
  lambda?: number;
  seed?: number;
  grid?: "coarse" | "fine";
  stages?: 2 | 3;
  sketchSteps?: number;
  sketchRatios?: RatioPair;
  autoWiden?: boolean;
}

export interface PlanResult {
  /** exact JSON bytes the core emitted (canonical, byte-stable) */
  text: string;
  /** parsed convenience view; 64-bit seeds may lose precision here */
  plan: any;
}

export interface TransitionParams {
  base: Grid3;
  from: RatioPair;
  to: RatioPair;
  steps: number;
  tau: number;
  seed: number;
}

export interface NoiseCoordinate {
  t: number;
  h: number;
  w: number;
  c: number;
  seed: number;
}

function asView(tensor: HostTensor | TensorView): TensorView {
  return "owned" in tensor ? tensor : fromHost(tensor);
}

function demandFlags(opts: DemandOptions): string[] {
  const flags: string[] = [];
  if (opts.cutoff !== undefined) flags.push("--cutoff", String(opts.cutoff));
  if (opts.flowReg !== undefined) flags.push("--flow-reg", String(opts.flowReg));
  if (opts.flowIters !== undefined) flags.push("--flow-iters", String(opts.flowIters));
  if (opts.normSpatial !== undefined) flags.push("--norm-spatial", opts.normSpatial.join(","));
  if (opts.normTemporal !== undefined) flags.push("--norm-temporal", opts.normTemporal.join(","));
  if (opts.sharpness !== undefined) flags.push("--sharpness", String(opts.sharpness));
  return flags;
}

/** Demand profile of a latent, exactly as `stalloc demand` reports it. */
export function demand(tensor: HostTensor | TensorView, opts: DemandOptions = {}): DemandProfile {
  const view = asView(tensor);
  return withTempDir((dir) => {
    const path = join(dir, "in.ltv");
    writeFileSync(path, encodeLtv(view));
    return JSON.parse(runStalloc(["demand", path, ...demandFlags(opts)]));
  });
}

/** Select a compression plan for a sketch latent. */
export function plan(tensor: HostTensor | TensorView, params: PlanParams): PlanResult {
  const view = asView(tensor);
  return withTempDir((dir) => {
    const sketchPath = join(dir, "sketch.ltv");
    const outPath = join(dir, "plan.json");
    writeFileSync(sketchPath, encodeLtv(view));
    const args = [
      "plan",
      "--sketch", sketchPath,
      "--frames", String(params.frames),
      "--height", String(params.height),
      "--width", String(params.width),
      "--steps", String(params.steps),
      "--out", outPath,
    ];
    if (params.budget !== undefined) args.push("--budget", String(params.budget));
    if (params.tolerance !== undefined) args.push("--tolerance", String(params.tolerance));
    if (params.lambda !== undefined) args.push("--lambda", String(params.lambda));
    if (params.seed !== undefined) args.push("--seed", String(params.seed));
    if (params.grid !== undefined) args.push("--grid", params.grid);
    if (params.stages !== undefined) args.push("--stages", String(params.stages));
    if (params.sketchSteps !== undefined) args.push("--sketch-steps", String(params.sketchSteps));
    if (params.sketchRatios !== undefined) args.push("--sketch-ratios", params.sketchRatios.join(","));
    if (params.autoWiden) args.push("--auto-widen");
    args.push(...demandFlags(params));
    runStalloc(args);
    const text = readFileSync(outPath, "utf-8");
    return { text, plan: JSON.parse(text) };
  });
}

/** Anchor-resize a latent to a target (frames, height, width) grid. */
export function resize(tensor: HostTensor | TensorView, target: Grid3): TensorView {
  const view = asView(tensor);
  return withTempDir((dir) => {
    const inPath = join(dir, "in.ltv");
    const outPath = join(dir, "out.ltv");
    writeFileSync(inPath, encodeLtv(view));
    runStalloc(["resize", "--in", inPath, "--target", target.join(","), "--out", outPath]);
    // copy out of the temp dir before it is removed
    const decoded = decodeLtv(Buffer.from(readFileSync(outPath)));
    return { shape: decoded.shape, data: decoded.data.slice(), owned: true };
  });
}

/** Full coordinate-addressed noise tensor for a (C, F, H, W) shape. */
export function noiseField(shape: Shape4, seed: number): TensorView {
  return withTempDir((dir) => {
    const outPath = join(dir, "noise.ltv");
    runStalloc(["noise", "--shape", shape.join(","), "--seed", String(seed), "--out", outPath]);
    const decoded = decodeLtv(Buffer.from(readFileSync(outPath)));
    return { shape: decoded.shape, data: decoded.data.slice(), owned: true };
  });
}

/**
 * One noise sample by coordinate, as the core serializes it (float32).
 *
 * Values are grid-agnostic: this generates the smallest grid covering
 * the coordinate and indexes into it, which by construction matches the
 * sample any larger grid would place there.
 */
export function coordNoise(coord: NoiseCoordinate): number {
  const shape: Shape4 = [coord.c + 1, coord.t + 1, coord.h + 1, coord.w + 1];
  const field = noiseField(shape, coord.seed);
  return field.data[field.data.length - 1];
}

/** Resize + renoise a latent between two stages of a plan. */
export function transition(tensor: HostTensor | TensorView, params: TransitionParams): TensorView {
  const view = asView(tensor);
  return withTempDir((dir) => {
    const inPath = join(dir, "in.ltv");
    const outPath = join(dir, "out.ltv");
    writeFileSync(inPath, encodeLtv(view));
    runStalloc([
      "transition",
      "--in", inPath,
      "--base", params.base.join(","),
      "--from", params.from.join(","),
      "--to", params.to.join(","),
      "--steps", String(params.steps),
      "--tau", String(params.tau),
      "--seed", String(params.seed),
      "--out", outPath,
    ]);
    const decoded = decodeLtv(Buffer.from(readFileSync(outPath)));
    return { shape: decoded.shape, data: decoded.data.slice(), owned: true };
  });
}
