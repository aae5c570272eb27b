// In-memory annotation state. One package carries exactly one of the
// five dimensions; a rating is keyed (annotator, video) inside its
// package so resubmission is last-write-wins by construction.

import {
  Dimension,
  ID_PATTERN,
  RatingRecord,
  formatExport,
  formatReviewExport,
  isDimension,
} from "./format.js";

export class StoreError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export interface PackageSpec {
  packageId: string;
  dimension: string;
  videoIds: string[];
  rubric: string;
  annotatorIds: string[];
}

interface AnnotationPackage {
  packageId: string;
  dimension: Dimension;
  videoIds: string[];
  rubric: string;
  annotatorIds: string[];
  ratings: Map<string, RatingRecord>; // key: annotator \x00 video
}

export interface NextItem {
  done: boolean;
  videoId?: string;
  videoUrl?: string;
  index?: number;
  total: number;
  dimension: Dimension;
  rubric: string;
}

interface ReviewSession {
  reviewId: string;
  items: { promptId: string; text: string }[];
  reviewerIds: string[];
  decisions: Map<string, { promptId: string; reviewerId: string; decision: string }>;
}

function checkIds(values: string[], what: string): void {
  if (values.length === 0) {
    throw new StoreError("BadPackage", `${what} list is empty`);
  }
  for (const v of values) {
    if (!ID_PATTERN.test(v)) {
      throw new StoreError("BadPackage", `${what} ${JSON.stringify(v)} has illegal characters`);
    }
  }
  if (new Set(values).size !== values.length) {
    throw new StoreError("BadPackage", `${what} list has duplicates`);
  }
}

export class Store {
  private packages = new Map<string, AnnotationPackage>();
  private reviews = new Map<string, ReviewSession>();

  createPackage(spec: PackageSpec) {
    if (!ID_PATTERN.test(spec.packageId)) {
      throw new StoreError("BadPackage", "package_id has illegal characters");
    }
    if (this.packages.has(spec.packageId)) {
      throw new StoreError("DuplicatePackage", `package ${spec.packageId} already exists`);
    }
    if (!isDimension(spec.dimension)) {
      throw new StoreError("BadPackage", `dimension must be one of the five, got ${spec.dimension}`);
    }
    checkIds(spec.videoIds, "video_id");
    checkIds(spec.annotatorIds, "annotator_id");
    const pkg: AnnotationPackage = {
      packageId: spec.packageId,
      dimension: spec.dimension,
      videoIds: [...spec.videoIds],
      rubric: spec.rubric,
      annotatorIds: [...spec.annotatorIds],
      ratings: new Map(),
    };
    this.packages.set(pkg.packageId, pkg);
    return this.summary(pkg);
  }

  private get(packageId: string): AnnotationPackage {
    const pkg = this.packages.get(packageId);
    if (!pkg) {
      throw new StoreError("UnknownPackage", `no package ${packageId}`);
    }
    return pkg;
  }

  private completion(pkg: AnnotationPackage): number {
    return pkg.ratings.size / (pkg.videoIds.length * pkg.annotatorIds.length);
  }

  private summary(pkg: AnnotationPackage) {
    return {
      packageId: pkg.packageId,
      dimension: pkg.dimension,
      videos: pkg.videoIds.length,
      annotators: pkg.annotatorIds.length,
      completion: this.completion(pkg),
    };
  }

  listPackages() {
    return [...this.packages.values()]
      .sort((a, b) => a.packageId.localeCompare(b.packageId))
      .map((p) => this.summary(p));
  }

  submitRating(packageId: string, annotatorId: string, videoId: string, rating: unknown) {
    const pkg = this.get(packageId);
    if (!pkg.annotatorIds.includes(annotatorId)) {
      throw new StoreError("OutOfPackage", `annotator ${annotatorId} not assigned to ${packageId}`);
    }
    if (!pkg.videoIds.includes(videoId)) {
      throw new StoreError("OutOfPackage", `video ${videoId} not in package ${packageId}`);
    }
    if (typeof rating !== "number" || !Number.isInteger(rating) || rating < 1 || rating > 5) {
      throw new StoreError("InvalidRating", `rating must be an integer 1..5, got ${rating}`);
    }
    pkg.ratings.set(`${annotatorId}\x00${videoId}`, {
      videoId,
      dimension: pkg.dimension,
      annotatorId,
      rating,
      packageId,
    });
    return { acknowledged: true, completion: this.completion(pkg) };
  }

  // Rate-in-order session flow: the next item is the first video this
  // annotator has not rated yet, so the cursor cannot pass a gap.
  nextItem(packageId: string, annotatorId: string): NextItem {
    const pkg = this.get(packageId);
    if (!pkg.annotatorIds.includes(annotatorId)) {
      throw new StoreError("OutOfPackage", `annotator ${annotatorId} not assigned to ${packageId}`);
    }
    const base = {
      total: pkg.videoIds.length,
      dimension: pkg.dimension,
      rubric: pkg.rubric,
    };
    for (let i = 0; i < pkg.videoIds.length; i++) {
      const videoId = pkg.videoIds[i];
      if (!pkg.ratings.has(`${annotatorId}\x00${videoId}`)) {
        return { done: false, videoId, videoUrl: `/videos/${videoId}`, index: i, ...base };
      }
    }
    return { done: true, ...base };
  }

  exportPackage(packageId: string): string {
    const pkg = this.get(packageId);
    return formatExport(
      pkg.packageId,
      pkg.dimension,
      [...pkg.ratings.values()],
      this.completion(pkg)
    );
  }

  createReview(reviewId: string, items: { promptId: string; text: string }[], reviewerIds: string[]) {
    if (!ID_PATTERN.test(reviewId)) {
      throw new StoreError("BadPackage", "review_id has illegal characters");
    }
    if (this.reviews.has(reviewId)) {
      throw new StoreError("DuplicatePackage", `review ${reviewId} already exists`);
    }
    checkIds(items.map((i) => i.promptId), "prompt_id");
    checkIds(reviewerIds, "reviewer_id");
    this.reviews.set(reviewId, {
      reviewId,
      items: items.map((i) => ({ ...i })),
      reviewerIds: [...reviewerIds],
      decisions: new Map(),
    });
    return { reviewId, prompts: items.length, reviewers: reviewerIds.length };
  }

  private getReview(reviewId: string): ReviewSession {
    const review = this.reviews.get(reviewId);
    if (!review) {
      throw new StoreError("UnknownReview", `no review ${reviewId}`);
    }
    return review;
  }

  submitDecision(reviewId: string, reviewerId: string, promptId: string, decision: string) {
    const review = this.getReview(reviewId);
    if (!review.reviewerIds.includes(reviewerId)) {
      throw new StoreError("OutOfReview", `reviewer ${reviewerId} not assigned to ${reviewId}`);
    }
    if (!review.items.some((i) => i.promptId === promptId)) {
      throw new StoreError("OutOfReview", `prompt ${promptId} not in review ${reviewId}`);
    }
    if (decision !== "accept" && decision !== "reject") {
      throw new StoreError("InvalidDecision", `decision must be accept or reject, got ${decision}`);
    }
    review.decisions.set(`${reviewerId}\x00${promptId}`, { promptId, reviewerId, decision });
    return { acknowledged: true };
  }

  nextReviewItem(reviewId: string, reviewerId: string) {
    const review = this.getReview(reviewId);
    if (!review.reviewerIds.includes(reviewerId)) {
      throw new StoreError("OutOfReview", `reviewer ${reviewerId} not assigned to ${reviewId}`);
    }
    for (let i = 0; i < review.items.length; i++) {
      const item = review.items[i];
      if (!review.decisions.has(`${reviewerId}\x00${item.promptId}`)) {
        return { done: false, promptId: item.promptId, text: item.text, index: i, total: review.items.length };
      }
    }
    return { done: true, total: review.items.length };
  }

  exportReview(reviewId: string): string {
    const review = this.getReview(reviewId);
    const completion =
      review.decisions.size / (review.items.length * review.reviewerIds.length);
    return formatReviewExport(reviewId, [...review.decisions.values()], completion);
  }
}
