export { SubgridError } from "./errors.js";
export { F64, canonicalJson, floatRepr, type JsonValue } from "./pyjson.js";
export { cliCommand, runCli, runCliJson, type RunOptions } from "./cli.js";
export {
  payloadPath,
  readAlignedTensor,
  readCloud,
  readGrid,
  readPartition,
  writeAlignedTensor,
  writeCloud,
  writeGrid,
  writePartition,
  checkCloud,
  type AlignedTensor,
  type BoundingBox,
  type Cloud,
  type Grid,
  type Leaf,
  type Partition,
  type TreeNode,
} from "./formats.js";
export {
  allocateFile,
  allocateShapes,
  backwardInterp,
  backwardInterpToFile,
  buildDataset,
  decompose,
  decomposeToFile,
  exportDataset,
  forwardInterp,
  forwardInterpToFile,
  roundtripErrors,
  synthCloud,
  synthToFile,
  type DecomposeOptions,
  type ExportOptions,
  type ExportPaths,
  type ResizeMethod,
  type RoundtripReport,
  type SynthOptions,
} from "./ops.js";
