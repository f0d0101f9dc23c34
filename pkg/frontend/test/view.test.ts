import { beforeEach, describe, expect, it, vi } from 'vitest';

import { BallotDraft } from '../src/state.js';
import { renderBallot, renderError, renderInstructions } from '../src/view.js';
import { DIMENSIONS, INSTRUCTIONS, ballotFixture, clickRadio } from './helpers.js';

let root: HTMLElement;

beforeEach(() => {
	document.body.innerHTML = '<div id="app"></div>';
	root = document.getElementById('app')!;
	localStorage.clear();
});

function renderFixtureBallot(draft?: BallotDraft, onSubmit = vi.fn()) {
	const ballot = ballotFixture();
	const d = draft ?? new BallotDraft(ballot, DIMENSIONS);
	renderBallot(root, ballot, DIMENSIONS, 'Ballot 1 of 5', d, { onSubmit });
	return { ballot, draft: d, onSubmit };
}

describe('instructions view', () => {
	it('renders every question text verbatim', () => {
		renderInstructions(root, INSTRUCTIONS, vi.fn());
		const text = root.textContent ?? '';
		for (const dim of INSTRUCTIONS.dimensions) {
			expect(text).toContain(dim.short_name);
			expect(text).toContain(dim.instruction);
		}
		expect(text).toContain(INSTRUCTIONS.general_comment);
	});

	it('keeps Begin disabled until the acknowledgment is checked', () => {
		const onBegin = vi.fn();
		renderInstructions(root, INSTRUCTIONS, onBegin);
		const begin = root.querySelector<HTMLButtonElement>('#begin')!;
		const ack = root.querySelector<HTMLInputElement>('#ack')!;
		expect(begin.disabled).toBe(true);
		begin.click();
		expect(onBegin).not.toHaveBeenCalled();

		ack.checked = true;
		ack.dispatchEvent(new Event('change'));
		expect(begin.disabled).toBe(false);
		begin.click();
		expect(onBegin).toHaveBeenCalledTimes(1);
	});

	it('renders an error banner with a retry control', () => {
		const onRetry = vi.fn();
		renderError(root, 'http_error: HTTP 500', onRetry);
		expect(root.textContent).toContain('HTTP 500');
		root.querySelector<HTMLButtonElement>('#retry')!.click();
		expect(onRetry).toHaveBeenCalledTimes(1);
	});
});

describe('ballot view', () => {
	it('renders a 3x3 grid of yes/no radio pairs', () => {
		renderFixtureBallot();
		const radios = root.querySelectorAll('input[type="radio"]');
		expect(radios.length).toBe(3 * 3 * 2);
		const names = new Set(
			Array.from(radios, (r) => (r as HTMLInputElement).name));
		expect(names.size).toBe(9);
		expect(root.querySelectorAll('tr.dimension-row').length).toBe(3);
	});

	it('shows the review text and progress', () => {
		const { ballot } = renderFixtureBallot();
		expect(root.querySelector('.review-text')!.textContent).toBe(ballot.review_text);
		expect(root.querySelector('.progress')!.textContent).toBe('Ballot 1 of 5');
	});

	it('keeps statement columns in server order', () => {
		const { ballot } = renderFixtureBallot();
		const headers = Array.from(
			root.querySelectorAll('th.statement'), (th) => th.textContent);
		expect(headers).toEqual(ballot.statements.map((s) => s.text));
	});

	it('disables submit until every cell is answered', () => {
		renderFixtureBallot();
		const submit = root.querySelector<HTMLButtonElement>('#submit')!;
		expect(submit.disabled).toBe(true);
		for (const statement of ballotFixture().statements) {
			for (const dim of DIMENSIONS) {
				expect(submit.disabled).toBe(true);
				clickRadio(root, statement.slot, dim.id, 'yes');
			}
		}
		expect(submit.disabled).toBe(false);
	});

	it('submits a payload with exactly one entry per cell', () => {
		const { draft, onSubmit } = renderFixtureBallot();
		for (const statement of ballotFixture().statements) {
			for (const dim of DIMENSIONS) {
				clickRadio(root, statement.slot, dim.id, dim.id === 'follows_from_review' ? 'no' : 'yes');
			}
		}
		root.querySelector<HTMLButtonElement>('#submit')!.click();
		expect(onSubmit).toHaveBeenCalledTimes(1);
		const payload = draft.toPayload();
		expect(payload.ballot_id).toBe(ballotFixture().ballot_id);
		expect(payload.rater_id).toBe('r1');
		expect(payload.answers.length).toBe(9);
		for (const cell of payload.answers) {
			expect([0, 1, 2]).toContain(cell.slot);
			expect(DIMENSIONS.map((d) => d.id)).toContain(cell.dimension);
			expect(['yes', 'no']).toContain(cell.answer);
		}
		expect(payload.answers.filter((c) => c.answer === 'no').length).toBe(3);
	});

	it('serialized document never contains blinded identifiers', () => {
		renderFixtureBallot();
		const hidden = [
			'method_alpha', 'method_beta', 'method_gamma',
			'human_analyst', 'base_llm', 'sft_llm',
			'informative', 'uninformative', 'decoy',
		];
		const serialized = document.documentElement.outerHTML;
		for (const token of hidden) {
			expect(serialized).not.toContain(token);
		}
	});
});

describe('draft persistence', () => {
	it('restores selections after a simulated refresh', () => {
		const ballot = ballotFixture();
		const draft = new BallotDraft(ballot, DIMENSIONS, localStorage);
		renderBallot(root, ballot, DIMENSIONS, 'Ballot 1 of 5', draft, { onSubmit: vi.fn() });
		clickRadio(root, 0, 'is_customer_need', 'yes');
		clickRadio(root, 1, 'sufficiently_specific', 'no');

		// refresh: new DOM, new draft over the same storage
		document.body.innerHTML = '<div id="app"></div>';
		root = document.getElementById('app')!;
		const restored = new BallotDraft(ballot, DIMENSIONS, localStorage);
		renderBallot(root, ballot, DIMENSIONS, 'Ballot 1 of 5', restored, { onSubmit: vi.fn() });

		const yes = root.querySelector<HTMLInputElement>(
			'input[name="answer-0-is_customer_need"][value="yes"]')!;
		const no = root.querySelector<HTMLInputElement>(
			'input[name="answer-1-sufficiently_specific"][value="no"]')!;
		const untouched = root.querySelector<HTMLInputElement>(
			'input[name="answer-2-follows_from_review"][value="yes"]')!;
		expect(yes.checked).toBe(true);
		expect(no.checked).toBe(true);
		expect(untouched.checked).toBe(false);
	});

	it('clears the stored draft once told to', () => {
		const ballot = ballotFixture();
		const draft = new BallotDraft(ballot, DIMENSIONS, localStorage);
		draft.answer(0, 'is_customer_need', 'yes');
		expect(localStorage.length).toBe(1);
		draft.clearStored();
		expect(localStorage.length).toBe(0);
	});
});
