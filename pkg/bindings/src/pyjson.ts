/**
 * Canonical JSON writer matching the core's manifest output byte for byte.
 *
 * The core emits manifests with 2-space indentation, insertion-ordered keys,
 * and floats printed as their shortest round-trip decimal in Python's repr
 * style.  Reproducing those bytes here means a manifest read and rewritten
 * on this side is identical to the original, so byte-level comparisons stay
 * meaningful across the language boundary.
 */

import { SubgridError } from "./errors.js";

/** Marks a number that must be serialized as a float ("1.0", "1e-05"), not an int. */
export class F64 {
  constructor(readonly value: number) {
    if (!Number.isFinite(value)) {
      throw new SubgridError(`non-finite float not serializable: ${value}`);
    }
  }
}

export type JsonValue =
  | null
  | boolean
  | number
  | string
  | F64
  | JsonValue[]
  | { [key: string]: JsonValue };

/**
 * Shortest round-trip decimal in Python repr style.
 *
 * JS toString already produces the shortest digit string, but its fixed vs.
 * exponential cutoffs differ (JS switches at 1e21 and 1e-7, Python at 1e16
 * and 1e-5) and integral floats drop the ".0".  This extracts the digits and
 * re-applies the other convention.
 */
export function floatRepr(x: number): string {
  if (!Number.isFinite(x)) {
    throw new SubgridError(`non-finite float not serializable: ${x}`);
  }
  const negative = x < 0 || Object.is(x, -0);
  const s = Math.abs(x).toString();

  // split the JS rendering into a digit string and a decimal-point position:
  // value = 0.<digits> * 10^decpt
  let digits: string;
  let decpt: number;
  const e = s.indexOf("e");
  if (e >= 0) {
    const mantissa = s.slice(0, e);
    const exp = parseInt(s.slice(e + 1), 10);
    const dot = mantissa.indexOf(".");
    digits = mantissa.replace(".", "");
    decpt = (dot < 0 ? mantissa.length : dot) + exp;
  } else {
    const dot = s.indexOf(".");
    if (dot < 0) {
      digits = s;
      decpt = s.length;
    } else {
      digits = s.slice(0, dot) + s.slice(dot + 1);
      decpt = dot;
    }
  }

  // normalize: strip leading and trailing zeros, keeping decpt consistent
  let start = 0;
  while (start < digits.length - 1 && digits[start] === "0") start++;
  decpt -= start;
  let end = digits.length;
  while (end > start + 1 && digits[end - 1] === "0") end--;
  digits = digits.slice(start, end);
  if (digits === "0") decpt = 1;

  let out: string;
  if (digits === "0") {
    out = "0.0";
  } else if (decpt <= -4 || decpt > 16) {
    const exp = decpt - 1;
    const mantissa = digits.length > 1 ? `${digits[0]}.${digits.slice(1)}` : digits;
    const expDigits = String(Math.abs(exp)).padStart(2, "0");
    out = `${mantissa}e${exp < 0 ? "-" : "+"}${expDigits}`;
  } else if (decpt <= 0) {
    out = `0.${"0".repeat(-decpt)}${digits}`;
  } else if (decpt >= digits.length) {
    out = `${digits}${"0".repeat(decpt - digits.length)}.0`;
  } else {
    out = `${digits.slice(0, decpt)}.${digits.slice(decpt)}`;
  }
  return negative ? `-${out}` : out;
}

function serialize(value: JsonValue, indent: string): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "string") return JSON.stringify(value);
  if (value instanceof F64) return floatRepr(value.value);
  if (typeof value === "number") {
    if (!Number.isSafeInteger(value)) {
      throw new SubgridError(`bare numbers must be integers, got ${value}; wrap floats in F64`);
    }
    return String(value);
  }
  const inner = indent + "  ";
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => inner + serialize(v, inner));
    return `[\n${items.join(",\n")}\n${indent}]`;
  }
  const keys = Object.keys(value);
  if (keys.length === 0) return "{}";
  const items = keys.map((k) => `${inner}${JSON.stringify(k)}: ${serialize(value[k]!, inner)}`);
  return `{\n${items.join(",\n")}\n${indent}}`;
}

/** Serialize with 2-space indentation plus the trailing newline manifests carry. */
export function canonicalJson(value: JsonValue): string {
  return serialize(value, "") + "\n";
}
