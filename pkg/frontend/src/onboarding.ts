/**
 * Onboarding wizard: appearance -> background -> traits. Pickers are built
 * from the service's catalog endpoint, so the choices offered are exactly
 * the ones the engine validates. Submit stays disabled until every step is
 * valid; server-side validation errors highlight the owning step without
 * losing any entered state.
 */

import { ApiClient, ApiError, NetworkError, PreferencesPayload } from "./api.js";
import { Catalogs, User } from "./schemas.js";

export const STEPS = ["appearance", "background", "traits"] as const;
export type StepName = (typeof STEPS)[number];

// mirrors the engine rule; the server remains the authority
export const EXCLUSIVE_TRAITS: readonly string[] = ["detailed", "direct"];

const STEP_BY_FIELD: Record<string, number> = {
  appearance: 0,
  age_band: 0,
  background_aesthetic: 1,
  traits: 2,
  emotional_expressiveness: 2,
};

export interface OnboardingState {
  step: number;
  ageBand: string;
  appearance: Record<string, string>;
  background: string;
  traits: string[];
  expressiveness: number;
  errors: Partial<Record<StepName, string>>;
  networkError: string | null;
  submitting: boolean;
}

export function initialState(catalogs: Catalogs): OnboardingState {
  return {
    step: 0,
    ageBand: "adult",
    appearance: {},
    background: catalogs.backgrounds[0] ?? "cozy-room",
    traits: ["friendly"],
    expressiveness: 3,
    errors: {},
    networkError: null,
    submitting: false,
  };
}

export function validateStep(state: OnboardingState, step: number): string | null {
  if (step === 2) {
    const exclusive = EXCLUSIVE_TRAITS.filter((t) => state.traits.includes(t));
    if (exclusive.length === EXCLUSIVE_TRAITS.length) {
      return `traits ${EXCLUSIVE_TRAITS.join(" and ")} are mutually exclusive`;
    }
  }
  return null;
}

export function allStepsValid(state: OnboardingState): boolean {
  return STEPS.every((_name, index) => validateStep(state, index) === null);
}

export function toPayload(state: OnboardingState): PreferencesPayload {
  return {
    age_band: state.ageBand,
    appearance: state.appearance,
    background_aesthetic: state.background,
    traits: state.traits,
    emotional_expressiveness: state.expressiveness,
  };
}

export interface OnboardingHandle {
  element: HTMLElement;
  state: OnboardingState;
  goTo(step: number): void;
  submit(): Promise<void>;
}

export function renderOnboarding(
  container: HTMLElement,
  client: ApiClient,
  catalogs: Catalogs,
  onCreated: (user: User) => void,
): OnboardingHandle {
  const state = initialState(catalogs);
  const root = document.createElement("section");
  root.className = "onboarding";
  container.replaceChildren(root);

  function fieldRow(labelText: string, input: HTMLElement): HTMLElement {
    const row = document.createElement("label");
    row.className = "field-row";
    const caption = document.createElement("span");
    caption.textContent = labelText;
    row.append(caption, input);
    return row;
  }

  function select(
    options: readonly string[],
    current: string,
    onChange: (value: string) => void,
    allowEmpty = false,
  ): HTMLSelectElement {
    const element = document.createElement("select");
    if (allowEmpty) {
      const blank = document.createElement("option");
      blank.value = "";
      blank.textContent = "(skip)";
      element.append(blank);
    }
    for (const value of options) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      element.append(option);
    }
    element.value = current;
    element.addEventListener("change", () => {
      onChange(element.value);
      update();
    });
    return element;
  }

  function appearancePanel(): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "step-panel";
    panel.append(
      fieldRow(
        "age band",
        select(catalogs.age_bands, state.ageBand, (v) => {
          state.ageBand = v;
        }),
      ),
    );
    for (const [attribute, values] of Object.entries(catalogs.appearance)) {
      panel.append(
        fieldRow(
          attribute.replace("_", " "),
          select(
            values,
            state.appearance[attribute] ?? "",
            (value) => {
              if (value) state.appearance[attribute] = value;
              else delete state.appearance[attribute];
            },
            true,
          ),
        ),
      );
    }
    return panel;
  }

  function backgroundPanel(): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "step-panel";
    panel.append(
      fieldRow(
        "background aesthetic",
        select(catalogs.backgrounds, state.background, (v) => {
          state.background = v;
        }),
      ),
    );
    return panel;
  }

  function traitsPanel(): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "step-panel";
    for (const trait of catalogs.traits) {
      const checkbox = document.createElement("input");
      checkbox.type = "checkbox";
      checkbox.checked = state.traits.includes(trait);
      checkbox.addEventListener("change", () => {
        state.traits = checkbox.checked
          ? [...state.traits, trait]
          : state.traits.filter((t) => t !== trait);
        update();
      });
      const label = document.createElement("label");
      label.className = "trait-option";
      label.append(checkbox, document.createTextNode(trait));
      panel.append(label);
    }
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "1";
    slider.max = "5";
    slider.value = String(state.expressiveness);
    slider.addEventListener("change", () => {
      state.expressiveness = Number(slider.value);
      update();
    });
    panel.append(fieldRow("emotional expressiveness", slider));
    return panel;
  }

  const panels = [appearancePanel, backgroundPanel, traitsPanel];

  function update(): void {
    root.replaceChildren();

    const heading = document.createElement("h2");
    heading.textContent = `Step ${state.step + 1} of ${STEPS.length}: ${STEPS[state.step]}`;
    root.append(heading);

    const panelBuilder = panels[state.step];
    if (panelBuilder) root.append(panelBuilder());

    const stepName = STEPS[state.step];
    const liveError = validateStep(state, state.step);
    const shownError = liveError ?? (stepName ? state.errors[stepName] : undefined) ?? null;
    if (shownError) {
      const error = document.createElement("p");
      error.className = "inline-error";
      error.dataset.step = stepName;
      error.textContent = shownError;
      root.append(error);
    }
    if (state.networkError) {
      const note = document.createElement("p");
      note.className = "network-error";
      note.textContent = `${state.networkError} — your choices are kept; try again.`;
      root.append(note);
    }

    const nav = document.createElement("div");
    nav.className = "wizard-nav";
    if (state.step > 0) {
      const back = document.createElement("button");
      back.textContent = "Back";
      back.addEventListener("click", () => handle.goTo(state.step - 1));
      nav.append(back);
    }
    if (state.step < STEPS.length - 1) {
      const next = document.createElement("button");
      next.textContent = "Next";
      next.disabled = liveError !== null;
      next.addEventListener("click", () => handle.goTo(state.step + 1));
      nav.append(next);
    } else {
      const create = document.createElement("button");
      create.className = "create-user";
      create.textContent = state.networkError ? "Retry" : "Create my journal";
      create.disabled = !allStepsValid(state) || state.submitting;
      create.addEventListener("click", () => void handle.submit());
      nav.append(create);
    }
    root.append(nav);
  }

  const handle: OnboardingHandle = {
    element: root,
    state,
    goTo(step: number): void {
      state.step = Math.max(0, Math.min(STEPS.length - 1, step));
      update();
    },
    async submit(): Promise<void> {
      state.errors = {};
      state.networkError = null;
      const localProblem = STEPS.map((_n, i) => validateStep(state, i)).find((e) => e !== null);
      if (localProblem) {
        update();
        return;
      }
      state.submitting = true;
      update();
      try {
        const user = await client.createUser(toPayload(state));
        onCreated(user);
      } catch (exc) {
        if (exc instanceof ApiError) {
          const step = exc.field !== null ? STEP_BY_FIELD[exc.field] : undefined;
          if (step !== undefined) {
            const name = STEPS[step];
            if (name) state.errors[name] = exc.message;
            state.step = step;
          } else {
            state.errors.traits = exc.message;
          }
        } else if (exc instanceof NetworkError) {
          state.networkError = "could not reach the journal service";
        } else {
          throw exc;
        }
      } finally {
        state.submitting = false;
        update();
      }
    },
  };

  update();
  return handle;
}
