/** Raised for anything the core rejects: bad shapes, malformed files, CLI failures. */
export class SubgridError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SubgridError";
  }
}
