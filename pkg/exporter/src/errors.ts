export class CheckpointLoadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CheckpointLoadError";
  }
}

export class DatasetError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DatasetError";
  }
}
