// Keyboard-first transform control. The left-hand WASDQE cluster moves
// the slice in the static patient frame; IJKLUO moves it in its own
// dynamic frame; holding Shift turns WASDQE into slice-frame rotations.
// Key positions roughly mirror the motion directions on QWERTY.

import type { ActionRequest } from "./api.js";

export interface StepSizes {
  translation_mm: number;
  rotation_deg: number;
}

export interface KeyBinding {
  key: string;
  shift: boolean;
  kind: "translate" | "rotate";
  frame: "patient" | "slice";
  axis: "x" | "y" | "z" | "u" | "v" | "n";
  sign: 1 | -1;
  hint: string;
}

export const KEY_BINDINGS: KeyBinding[] = [
  // patient-frame translations
  { key: "w", shift: false, kind: "translate", frame: "patient", axis: "y", sign: 1, hint: "anterior" },
  { key: "s", shift: false, kind: "translate", frame: "patient", axis: "y", sign: -1, hint: "posterior" },
  { key: "a", shift: false, kind: "translate", frame: "patient", axis: "x", sign: -1, hint: "left" },
  { key: "d", shift: false, kind: "translate", frame: "patient", axis: "x", sign: 1, hint: "right" },
  { key: "q", shift: false, kind: "translate", frame: "patient", axis: "z", sign: 1, hint: "superior" },
  { key: "e", shift: false, kind: "translate", frame: "patient", axis: "z", sign: -1, hint: "inferior" },
  // slice-frame translations
  { key: "i", shift: false, kind: "translate", frame: "slice", axis: "v", sign: 1, hint: "in-plane up" },
  { key: "k", shift: false, kind: "translate", frame: "slice", axis: "v", sign: -1, hint: "in-plane down" },
  { key: "j", shift: false, kind: "translate", frame: "slice", axis: "u", sign: -1, hint: "in-plane left" },
  { key: "l", shift: false, kind: "translate", frame: "slice", axis: "u", sign: 1, hint: "in-plane right" },
  { key: "u", shift: false, kind: "translate", frame: "slice", axis: "n", sign: 1, hint: "along normal" },
  { key: "o", shift: false, kind: "translate", frame: "slice", axis: "n", sign: -1, hint: "against normal" },
  // slice-frame rotations (Shift layer)
  { key: "w", shift: true, kind: "rotate", frame: "slice", axis: "u", sign: 1, hint: "pitch +" },
  { key: "s", shift: true, kind: "rotate", frame: "slice", axis: "u", sign: -1, hint: "pitch -" },
  { key: "a", shift: true, kind: "rotate", frame: "slice", axis: "v", sign: -1, hint: "yaw -" },
  { key: "d", shift: true, kind: "rotate", frame: "slice", axis: "v", sign: 1, hint: "yaw +" },
  { key: "q", shift: true, kind: "rotate", frame: "slice", axis: "n", sign: 1, hint: "roll +" },
  { key: "e", shift: true, kind: "rotate", frame: "slice", axis: "n", sign: -1, hint: "roll -" },
];

export function keyToAction(key: string, shift: boolean,
                            steps: StepSizes): ActionRequest | null {
  const normalized = key.toLowerCase();
  const binding = KEY_BINDINGS.find(b => b.key === normalized && b.shift === shift);
  if (!binding) {
    return null;
  }
  const step = binding.kind === "translate" ? steps.translation_mm : steps.rotation_deg;
  return {
    type: binding.kind,
    frame: binding.frame,
    axis: binding.axis,
    amount: binding.sign * step,
  };
}
