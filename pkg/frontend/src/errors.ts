/** Typed errors for figure rendering. */

export class MissingColumn extends Error {
  constructor(column: string, path: string) {
    super(`column '${column}' not found in ${path}`);
    this.name = "MissingColumn";
  }
}

export class EmptyInput extends Error {
  constructor(path: string) {
    super(`no data rows in ${path}`);
    this.name = "EmptyInput";
  }
}
