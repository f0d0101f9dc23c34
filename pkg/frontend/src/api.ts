// Typed client for the study service. The UI consumes this API
// exclusively; statement order arrives server-side randomized and is
// never re-sorted here.

export interface DimensionInfo {
	id: string;
	short_name: string;
	instruction: string;
}

export interface StudyInstructions {
	study_id: string;
	general_comment: string;
	dimensions: DimensionInfo[];
}

export interface BallotStatement {
	slot: number;
	text: string;
}

export interface BallotPayload {
	ballot_id: string;
	rater_id: string;
	review_text: string;
	statements: BallotStatement[];
}

export interface NextBallotResponse {
	ballot: BallotPayload | null;
	remaining: number;
}

export interface AnswerCell {
	slot: number;
	dimension: string;
	answer: 'yes' | 'no';
}

export interface RatingPayload {
	ballot_id: string;
	rater_id: string;
	answers: AnswerCell[];
	submitted_at: string;
}

export interface SubmitResult {
	status: 'accepted' | 'already-recorded';
}

export interface Progress {
	rater_id: string;
	rated: number;
	total: number;
}

export interface ApiErrorBody {
	code: string;
	message: string;
}

export class ApiError extends Error {
	code: string;
	status: number;

	constructor(status: number, body: ApiErrorBody) {
		super(body.message);
		this.status = status;
		this.code = body.code;
	}
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
	const response = await fetch(base + path, init);
	if (!response.ok) {
		let body: ApiErrorBody;
		try {
			body = (await response.json()) as ApiErrorBody;
		} catch {
			body = { code: 'http_error', message: `HTTP ${response.status}` };
		}
		throw new ApiError(response.status, body);
	}
	return (await response.json()) as T;
}

export class StudyApi {
	constructor(private base: string = '') {}

	getInstructions(): Promise<StudyInstructions> {
		return request<StudyInstructions>(this.base, '/api/study');
	}

	nextBallot(raterId: string): Promise<NextBallotResponse> {
		return request<NextBallotResponse>(
			this.base, `/api/raters/${encodeURIComponent(raterId)}/next-ballot`);
	}

	submitRating(payload: RatingPayload): Promise<SubmitResult> {
		return request<SubmitResult>(this.base, '/api/ratings', {
			method: 'POST',
			headers: { 'Content-Type': 'application/json' },
			body: JSON.stringify(payload),
		});
	}

	progress(raterId: string): Promise<Progress> {
		return request<Progress>(
			this.base, `/api/raters/${encodeURIComponent(raterId)}/progress`);
	}
}
