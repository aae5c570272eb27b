// Annotation line format shared with the scoring workbench importer:
// video_id,dimension,annotator_id,rating,package_id with '#' comment
// lines. Ids must stay comma-free so the CSV never needs quoting.

export const DIMENSIONS = ["CAS", "MSS", "OIS", "PAS", "TCS"] as const;
export type Dimension = (typeof DIMENSIONS)[number];

export const ID_PATTERN = /^[A-Za-z0-9._-]+$/;

export interface RatingRecord {
  videoId: string;
  dimension: Dimension;
  annotatorId: string;
  rating: number;
  packageId: string;
}

export function isDimension(value: string): value is Dimension {
  return (DIMENSIONS as readonly string[]).includes(value);
}

export function formatExport(
  packageId: string,
  dimension: Dimension,
  records: RatingRecord[],
  completion: number
): string {
  const header = `# package ${packageId} dimension ${dimension} completion ${completion.toFixed(3)}`;
  const lines = [...records]
    .sort((a, b) =>
      a.videoId === b.videoId
        ? a.annotatorId.localeCompare(b.annotatorId)
        : a.videoId.localeCompare(b.videoId)
    )
    .map(
      (r) => `${r.videoId},${r.dimension},${r.annotatorId},${r.rating},${r.packageId}`
    );
  return [header, ...lines].join("\n") + "\n";
}

export function formatReviewExport(
  reviewId: string,
  decisions: { promptId: string; reviewerId: string; decision: string }[],
  completion: number
): string {
  const header = `# review ${reviewId} completion ${completion.toFixed(3)}`;
  const lines = [...decisions]
    .sort((a, b) =>
      a.promptId === b.promptId
        ? a.reviewerId.localeCompare(b.reviewerId)
        : a.promptId.localeCompare(b.promptId)
    )
    .map((d) => `${d.promptId},${d.reviewerId},${d.decision}`);
  return [header, ...lines].join("\n") + "\n";
}
