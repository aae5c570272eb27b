import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import express, { NextFunction, Request, Response } from "express";
import { Store, StoreError } from "./store.js";

export interface AppOptions {
  token: string;
  videoDir?: string;
}

const PUBLIC_DIR = join(dirname(fileURLToPath(import.meta.url)), "..", "public");

const STATUS: Record<string, number> = {
  UnknownPackage: 404,
  UnknownReview: 404,
  DuplicatePackage: 409,
};

export function buildApp(store: Store, opts: AppOptions): express.Express {
  if (!opts.token) {
    throw new Error("a shared token is required");
  }
  const app = express();
  app.use(express.json());
  app.use(express.static(PUBLIC_DIR));

  if (opts.videoDir) {
    app.use("/videos", express.static(opts.videoDir));
  }

  app.use("/api", (req: Request, res: Response, next: NextFunction) => {
    if (req.headers.authorization !== `Bearer ${opts.token}`) {
      res.status(401).json({ error: "Unauthorized", message: "bad or missing token" });
      return;
    }
    next();
  });

  app.post("/api/packages", (req, res) => {
    const body = req.body ?? {};
    res.status(201).json(
      store.createPackage({
        packageId: String(body.packageId ?? ""),
        dimension: String(body.dimension ?? ""),
        videoIds: Array.isArray(body.videoIds) ? body.videoIds.map(String) : [],
        rubric: String(body.rubric ?? ""),
        annotatorIds: Array.isArray(body.annotatorIds) ? body.annotatorIds.map(String) : [],
      })
    );
  });

  app.get("/api/packages", (_req, res) => {
    res.json(store.listPackages());
  });

  app.get("/api/packages/:id/next", (req, res) => {
    res.json(store.nextItem(req.params.id, String(req.query.annotator ?? "")));
  });

  app.post("/api/packages/:id/ratings", (req, res) => {
    const body = req.body ?? {};
    res.json(
      store.submitRating(
        req.params.id,
        String(body.annotatorId ?? ""),
        String(body.videoId ?? ""),
        body.rating
      )
    );
  });

  app.get("/api/packages/:id/export", (req, res) => {
    res.type("text/plain").send(store.exportPackage(req.params.id));
  });

  app.post("/api/reviews", (req, res) => {
    const body = req.body ?? {};
    const items = Array.isArray(body.items)
      ? body.items.map((i: any) => ({
          promptId: String(i.promptId ?? ""),
          text: String(i.text ?? ""),
        }))
      : [];
    const reviewers = Array.isArray(body.reviewerIds) ? body.reviewerIds.map(String) : [];
    res.status(201).json(store.createReview(String(body.reviewId ?? ""), items, reviewers));
  });

  app.get("/api/reviews/:id/next", (req, res) => {
    res.json(store.nextReviewItem(req.params.id, String(req.query.reviewer ?? "")));
  });

  app.post("/api/reviews/:id/decisions", (req, res) => {
    const body = req.body ?? {};
    res.json(
      store.submitDecision(
        req.params.id,
        String(body.reviewerId ?? ""),
        String(body.promptId ?? ""),
        String(body.decision ?? "")
      )
    );
  });

  app.get("/api/reviews/:id/export", (req, res) => {
    res.type("text/plain").send(store.exportReview(req.params.id));
  });

  app.use((err: unknown, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof StoreError) {
      res.status(STATUS[err.code] ?? 400).json({ error: err.code, message: err.message });
      return;
    }
    next(err);
  });
  return app;
}
