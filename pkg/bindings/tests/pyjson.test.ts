import { spawnSync } from "node:child_process";
import { describe, expect, it } from "vitest";

import { F64, canonicalJson, floatRepr, type JsonValue } from "../src/pyjson.js";
import { SubgridError } from "../src/errors.js";

function python(script: string, input: string): string {
  const result = spawnSync("python3", ["-c", script], {
    input,
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.status !== 0) throw new Error(result.stderr);
  return result.stdout;
}

// deterministic 64-bit generator (splitmix64) so the fuzz corpus is stable
function* randomBits(seed: bigint, count: number): Generator<bigint> {
  let state = seed;
  for (let i = 0; i < count; i++) {
    state = (state + 0x9e3779b97f4a7c15n) & 0xffffffffffffffffn;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & 0xffffffffffffffffn;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & 0xffffffffffffffffn;
    yield z ^ (z >> 31n);
  }
}

describe("floatRepr", () => {
  it("matches the reference repr on hand-picked values", () => {
    const reprs: [number, string][] = [
      [0, "0.0"],
      [-0, "-0.0"],
      [1, "1.0"],
      [-1, "-1.0"],
      [0.5, "0.5"],
      [100, "100.0"],
      [1e-4, "0.0001"],
      [1e-5, "1e-05"],
      [1.5e-7, "1.5e-07"],
      [1e16, "1e+16"],
      [9999999999999998, "9999999999999998.0"],
      [1e21, "1e+21"],
      [5e-324, "5e-324"],
      [0.1, "0.1"],
      [2 / 3, "0.6666666666666666"],
    ];
    for (const [x, want] of reprs) expect(floatRepr(x)).toBe(want);
  });

  it("rejects non-finite values", () => {
    expect(() => floatRepr(Infinity)).toThrow(SubgridError);
    expect(() => floatRepr(NaN)).toThrow(SubgridError);
  });

  it("matches the reference repr on 4000 random bit patterns", () => {
    const view = new DataView(new ArrayBuffer(8));
    const values: number[] = [];
    const hexLines: string[] = [];
    for (const bits of randomBits(42n, 8000)) {
      view.setBigUint64(0, bits, true);
      const x = view.getFloat64(0, true);
      if (!Number.isFinite(x)) continue;
      values.push(x);
      hexLines.push(bits.toString(16).padStart(16, "0"));
      if (values.length === 4000) break;
    }
    expect(values.length).toBe(4000);

    // the hex lines spell the bit pattern most-significant byte first
    const script = [
      "import struct, sys",
      "for line in sys.stdin:",
      "    line = line.strip()",
      "    if not line:",
      "        continue",
      "    (v,) = struct.unpack('>d', bytes.fromhex(line))",
      "    print(repr(v))",
    ].join("\n");
    const want = python(script, hexLines.join("\n") + "\n").trimEnd().split("\n");

    expect(want.length).toBe(values.length);
    for (let i = 0; i < values.length; i++) {
      expect(floatRepr(values[i]!), `bit pattern ${hexLines[i]}`).toBe(want[i]!);
    }
  });
});

describe("canonicalJson", () => {
  it("matches the reference serializer byte for byte", () => {
    const obj: JsonValue = {
      dims: 2,
      count: 3,
      nested: {
        lo: [new F64(0), new F64(0.25)],
        hi: [new F64(1), new F64(1e-7)],
        flags: [true, false],
        empty_list: [],
        empty_dict: {},
        name: "f64le",
      },
      items: [{ a: 1 }, { b: new F64(-0) }],
    };
    const script = [
      "import json",
      "obj = {",
      "    'dims': 2,",
      "    'count': 3,",
      "    'nested': {",
      "        'lo': [0.0, 0.25],",
      "        'hi': [1.0, 1e-07],",
      "        'flags': [True, False],",
      "        'empty_list': [],",
      "        'empty_dict': {},",
      "        'name': 'f64le',",
      "    },",
      "    'items': [{'a': 1}, {'b': -0.0}],",
      "}",
      "print(json.dumps(obj, indent=2))",
    ].join("\n");
    const want = python(script, "");
    expect(canonicalJson(obj)).toBe(want);
  });

  it("rejects bare non-integer numbers", () => {
    expect(() => canonicalJson({ x: 0.5 })).toThrow(/wrap floats in F64/);
  });
});
