// DOM rendering for the rater flow: instructions -> ballots -> done.
// Statement columns render exactly in the order delivered by the API, and
// nothing method-related ever reaches the document: the payload itself
// carries no method identifiers, labels, or decoy markers.

import type { BallotPayload, DimensionInfo, StudyInstructions } from './api.js';
import { BallotDraft } from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
	tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
	const node = document.createElement(tag);
	if (className) node.className = className;
	if (text !== undefined) node.textContent = text;
	return node;
}

export function renderInstructions(
	root: HTMLElement,
	instructions: StudyInstructions,
	onBegin: () => void,
): void {
	root.replaceChildren();
	const page = el('div', 'instructions');
	page.appendChild(el('h1', 'title', 'Evaluation instructions'));
	page.appendChild(el('p', 'general-comment', instructions.general_comment));

	const list = el('ol', 'question-list');
	for (const dim of instructions.dimensions) {
		const item = el('li', 'question');
		item.appendChild(el('h2', 'question-name', dim.short_name));
		item.appendChild(el('p', 'question-instruction', dim.instruction));
		list.appendChild(item);
	}
	page.appendChild(list);

	const ackRow = el('label', 'ack-row');
	const ack = el('input') as HTMLInputElement;
	ack.type = 'checkbox';
	ack.id = 'ack';
	ackRow.appendChild(ack);
	ackRow.appendChild(el('span', undefined, ' I have read and understood the instructions.'));
	page.appendChild(ackRow);

	const begin = el('button', 'begin', 'Begin') as HTMLButtonElement;
	begin.id = 'begin';
	begin.disabled = true;
	ack.addEventListener('change', () => { begin.disabled = !ack.checked; });
	begin.addEventListener('click', () => { if (ack.checked) onBegin(); });
	page.appendChild(begin);

	root.appendChild(page);
}

export interface BallotViewCallbacks {
	onSubmit: (draft: BallotDraft) => void;
}

export function renderBallot(
	root: HTMLElement,
	ballot: BallotPayload,
	dimensions: DimensionInfo[],
	progressText: string,
	draft: BallotDraft,
	callbacks: BallotViewCallbacks,
): void {
	root.replaceChildren();
	const page = el('div', 'ballot');
	page.dataset.ballotId = ballot.ballot_id;

	page.appendChild(el('div', 'progress', progressText));

	const reviewPanel = el('div', 'review-panel');
	reviewPanel.appendChild(el('h2', undefined, 'Online review'));
	reviewPanel.appendChild(el('p', 'review-text', ballot.review_text));
	page.appendChild(reviewPanel);

	const table = el('table', 'answer-grid');
	const head = el('tr');
	head.appendChild(el('th', 'corner', ''));
	for (const statement of ballot.statements) {
		const cell = el('th', 'statement', statement.text);
		cell.colSpan = 2;
		head.appendChild(cell);
	}
	table.appendChild(head);

	const yesNoRow = el('tr');
	yesNoRow.appendChild(el('th', undefined, ''));
	for (let i = 0; i < ballot.statements.length; i++) {
		yesNoRow.appendChild(el('th', 'yes-no', 'Yes'));
		yesNoRow.appendChild(el('th', 'yes-no', 'No'));
	}
	table.appendChild(yesNoRow);

	const submit = el('button', 'submit', 'Submit answers') as HTMLButtonElement;
	submit.id = 'submit';

	const refreshSubmit = () => { submit.disabled = !draft.complete(); };

	for (const dim of dimensions) {
		const row = el('tr', 'dimension-row');
		row.dataset.dimension = dim.id;
		row.appendChild(el('th', 'dimension-name', dim.short_name));
		for (const statement of ballot.statements) {
			for (const value of ['yes', 'no'] as const) {
				const cell = el('td', 'answer-cell');
				const radio = el('input') as HTMLInputElement;
				radio.type = 'radio';
				radio.name = `answer-${statement.slot}-${dim.id}`;
				radio.value = value;
				radio.checked = draft.valueFor(statement.slot, dim.id) === value;
				radio.addEventListener('change', () => {
					draft.answer(statement.slot, dim.id, value);
					refreshSubmit();
				});
				cell.appendChild(radio);
				row.appendChild(cell);
			}
		}
		table.appendChild(row);
	}
	page.appendChild(table);

	const notice = el('div', 'notice');
	notice.id = 'notice';
	page.appendChild(notice);

	refreshSubmit();
	submit.addEventListener('click', () => {
		if (draft.complete()) callbacks.onSubmit(draft);
	});
	page.appendChild(submit);

	root.appendChild(page);
}

export function renderNotice(root: HTMLElement, text: string): void {
	const notice = root.querySelector('#notice');
	if (notice) notice.textContent = text;
}

export function renderDone(root: HTMLElement, ratedCount: number): void {
	root.replaceChildren();
	const page = el('div', 'done');
	page.appendChild(el('h1', undefined, 'All done'));
	page.appendChild(el('p', undefined,
		`You have completed all ${ratedCount} evaluations. Thank you.`));
	root.appendChild(page);
}

export function renderError(root: HTMLElement, message: string, onRetry: () => void): void {
	root.replaceChildren();
	const page = el('div', 'error-banner');
	page.appendChild(el('p', 'error-text', message));
	const retry = el('button', 'retry', 'Retry') as HTMLButtonElement;
	retry.id = 'retry';
	retry.addEventListener('click', onRetry);
	page.appendChild(retry);
	root.appendChild(page);
}
