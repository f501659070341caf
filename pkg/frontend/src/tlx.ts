/**
 * Post-trial workload form: six 0-100 scales, all required before submit.
 */

export const TLX_DIMENSIONS = [
  "mental",
  "physical",
  "temporal",
  "performance",
  "effort",
  "frustration",
] as const;

export type TlxDimension = (typeof TLX_DIMENSIONS)[number];

export type TlxValues = Partial<Record<TlxDimension, number>>;

export function tlxComplete(values: TlxValues): boolean {
  return TLX_DIMENSIONS.every((d) => {
    const v = values[d];
    return typeof v === "number" && v >= 0 && v <= 100;
  });
}

export function tlxPayload(
  values: TlxValues,
  participantId: string,
  taskId: number,
): Record<string, number | string> {
  if (!tlxComplete(values)) {
    throw new Error("all six TLX scales are required");
  }
  const payload: Record<string, number | string> = {
    participant_id: participantId,
    task_id: taskId,
  };
  for (const d of TLX_DIMENSIONS) payload[d] = values[d] as number;
  return payload;
}

/** Build the form DOM; onSubmit receives the validated payload. */
export function buildTlxForm(
  container: HTMLElement,
  participantId: string,
  taskId: number,
  onSubmit: (payload: Record<string, number | string>) => void,
): void {
  container.innerHTML = "";
  const values: TlxValues = {};
  const title = document.createElement("h3");
  title.textContent = `Workload rating, task ${taskId}`;
  container.appendChild(title);

  for (const d of TLX_DIMENSIONS) {
    const row = document.createElement("label");
    row.className = "tlx-row";
    const name = document.createElement("span");
    name.textContent = d;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.step = "1";
    slider.value = "50";
    const out = document.createElement("output");
    out.textContent = "·";
    slider.addEventListener("input", () => {
      values[d] = Number(slider.value);
      out.textContent = slider.value;
      button.disabled = !tlxComplete(values);
    });
    row.append(name, slider, out);
    container.appendChild(row);
  }

  const button = document.createElement("button");
  button.textContent = "Submit rating";
  button.disabled = true; // untouched sliders are not answers
  button.addEventListener("click", () => {
    if (!tlxComplete(values)) return;
    onSubmit(tlxPayload(values, participantId, taskId));
    container.innerHTML = "";
  });
  container.appendChild(button);
}
