import type { AnnotationController } from "./store.js";

export type Action = "undo" | "save";

/** Single source of truth for shortcuts: buttons and keys dispatch the same
 * actions, so a key press is exactly equivalent to the button click. */
export function actionForKey(key: string): Action | null {
  switch (key) {
    case "u":
      return "undo";
    case " ":
      return "save";
    default:
      return null;
  }
}

export function runAction(controller: AnnotationController, action: Action): Promise<void> | void {
  switch (action) {
    case "undo":
      return controller.undo();
    case "save":
      return controller.saveAndNext();
  }
}
