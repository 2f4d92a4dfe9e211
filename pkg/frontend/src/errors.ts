/** Base error for non-2xx service responses; carries the stable error code. */
export class KernelServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "KernelServiceError";
  }
}

export class GroupTooSmallError extends KernelServiceError {
  constructor(message: string, status: number) {
    super("group_too_small", message, status);
    this.name = "GroupTooSmallError";
  }
}

export class InsufficientBudgetError extends KernelServiceError {
  constructor(message: string, status: number) {
    super("insufficient_budget", message, status);
    this.name = "InsufficientBudgetError";
  }
}

export class NumericalKernelError extends KernelServiceError {
  constructor(message: string, status: number) {
    super("numerical_error", message, status);
    this.name = "NumericalKernelError";
  }
}

export function errorFromResponse(code: string, message: string, status: number): KernelServiceError {
  switch (code) {
    case "group_too_small":
      return new GroupTooSmallError(message, status);
    case "insufficient_budget":
      return new InsufficientBudgetError(message, status);
    case "numerical_error":
      return new NumericalKernelError(message, status);
    default:
      return new KernelServiceError(code, message, status);
  }
}
