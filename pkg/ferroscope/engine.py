"""
Ferroscope Engine
=================

Stage orchestration for the steel anomaly pipeline. Every CLI subcommand is
one ``PipelineEngine`` method, and stages hand data to each other only
through files under ``paths.workdir``:

    pools/train/, pools/holdout/     normal GAN/SVM pool and held-out scoring pool
    tiles/                           unit images cut from raw images, manifest.csv
    models/                          *.fsck checkpoints (+ .arch.yaml), ocsvm.ocsv
    features/<pool>.fvec, .csv       discriminator features and their tile index
    scores/<pool>.csv                tile_id,label,raw_v,eq1_score,norm_score
    maps/                            heatmap and overlay PNGs, af.csv
    montage/, hist/, reports/

The classifier corpus lives at ``paths.corpus`` and raw images at
``paths.raw_images``.
"""

import csv
import time
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import cv2
import numpy as np
import yaml

from ferroscope.anomap import (
    MapParams,
    MontageOrder,
    anomalous_features,
    background_flags,
    build_map,
    histogram,
    montage,
    pair_montage,
    plot_histogram,
    rank_tiles,
    render,
    side_totals,
    write_histogram_csv,
)
from ferroscope.imaging import (
    RawImage,
    TileGrid,
    TilePolicy,
    UnitImage,
    read_png,
    read_tile_manifest,
    tile,
    untile,
    write_png,
    write_tile_manifest,
)
from ferroscope.metrics import ConfusionMatrix, class_report, confusion, roc_auc, score_summary, write_confusion
from ferroscope.nets import (
    NetConfig,
    build_classifier,
    build_discriminator,
    build_generator,
    classify_array,
    feature_array,
    layer_census,
    stack_tiles,
)
from ferroscope.ocsvm import OcsvmParams, calibrate, decision_batch, fit, read_features, read_model, score_batch, write_features, write_model
from ferroscope.synthdata import (
    DEFECT_CLASSES,
    GAN_STREAM,
    HOLDOUT_STREAM,
    NORMAL,
    CorpusConfig,
    gen_strip,
    load_corpus,
    make_corpus,
    split_labels,
)
from ferroscope.training import (
    LEARNING_CURVE_HEADER,
    TrainConfig,
    checkpoint,
    learning_curve,
    restore,
    train_classifier,
    train_gan,
)
from ferroscope.training.config import plain
from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError, FormatError, InvalidArgumentError, TrainingDivergedError
from ferroscope.utils.fileio import atomic_write_text, write_csv
from ferroscope.utils.logger import logger

POOLS = ("train", "holdout", "tiles")
SCORE_HEADER = ["tile_id", "label", "raw_v", "eq1_score", "norm_score"]
AF_HEADER = ["source_id", "row", "col", "predicted", "anomalous_mass", "norm_score", "af"]
INDEX_HEADER = ["tile_id", "label"]


def split_evenly(total: int, names: Sequence[str]) -> Dict[str, int]:
    """Spread ``total`` over ``names``; earlier names take the remainder."""
    base, extra = divmod(total, len(names))
    return {name: base + (1 if i < extra else 0) for i, name in enumerate(names)}


def _require(*paths: Path) -> None:
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise FormatError(f"Missing stage input(s): {', '.join(missing)}")


def _to_channels(raw: RawImage, channels: int) -> RawImage:
    if raw.channels == channels:
        return raw
    if channels == 1 and raw.channels == 3:
        gray = cv2.cvtColor(raw.pixels, cv2.COLOR_RGB2GRAY)[:, :, None]
        return RawImage(np.ascontiguousarray(gray), raw.source_id)
    if channels == 3 and raw.channels == 1:
        return RawImage(np.ascontiguousarray(np.repeat(raw.pixels, 3, axis=2)), raw.source_id)
    raise InvalidArgumentError(f"Cannot convert {raw.channels}-channel image {raw.source_id} to {channels} channels")


def _read_rows(path: Path) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


class PipelineEngine:
    """Runs pipeline stages against one resolved configuration."""

    def __init__(self, loader: ConfigLoader = default_config) -> None:
        """Build every typed config view up front so bad settings fail before any stage writes."""
        self.config = loader
        self.seed = loader.seed()
        self.workdir = Path(loader.get("paths.workdir", "runs/desk"))
        self.corpus_dir = Path(loader.get("paths.corpus", self.workdir / "corpus"))
        self.raw_dir = Path(loader.get("paths.raw_images", self.workdir / "strips"))
        self.tile_side = int(loader.get("imgrid.tile_side", 32))
        try:
            self.policy = TilePolicy.parse(loader.get("imgrid.policy", TilePolicy.SCALE_UP))
        except InvalidArgumentError as e:
            raise ConfigError(f"imgrid.policy: {e}") from e
        self.net_config = NetConfig.from_config(loader)
        self.classifier_depth = int(loader.get("net.classifier_depth", 3))
        self.map_params = MapParams.from_config(loader)
        self.catalog = self.map_params.catalog
        self.ocsvm_params = OcsvmParams.from_config(loader)
        self.corpus_config = CorpusConfig.from_config(loader)
        self.cls_config = TrainConfig.from_config("classifier", loader)
        self.gan_config = TrainConfig.from_config("gan", loader)
        self.learning_sizes = [int(s) for s in loader.get("train.classifier.learning_curve", []) or []]

        self.stages: "OrderedDict[str, Callable[[], None]]" = OrderedDict(
            [
                ("synth", self.synth),
                ("tile", self.tile),
                ("train-cls", self.train_classifier),
                ("train-gan", self.train_gan),
                ("features", self.features),
                ("fit-svm", self.fit_svm),
                ("score", self.score),
                ("map", self.map),
                ("montage", self.montage),
                ("hist", self.hist),
                ("eval", self.evaluate),
            ]
        )
        logger.debug("Pipeline engine initialized", workdir=str(self.workdir), seed=self.seed)

    # Layout

    def path(self, *parts: str) -> Path:
        return self.workdir.joinpath(*parts)

    def pool_dir(self, pool: str) -> Path:
        if pool == "tiles":
            return self.path("tiles")
        return self.path("pools", pool)

    def model_path(self, name: str) -> Path:
        suffix = ".ocsv" if name == "ocsvm" else ".fsck"
        return self.path("models", name + suffix)

    def _available_pools(self, kind: str) -> List[str]:
        if kind == "features":
            found = [p for p in POOLS if (self.pool_dir(p) / "manifest.csv").exists()]
        else:
            found = [p for p in POOLS if self.path("features", f"{p}.fvec").exists()]
        if not found:
            raise FormatError(f"No {kind} input pools under {self.workdir}; run the earlier stages first")
        return found

    def run(self, stage: str) -> None:
        if stage not in self.stages:
            raise InvalidArgumentError(f"Unknown stage {stage!r}; choose from {list(self.stages)}")
        logger.info("Stage started", stage=stage)
        started = time.perf_counter()
        self.stages[stage]()
        logger.info("Stage finished", stage=stage, seconds=round(time.perf_counter() - started, 2))

    # Data loading

    def _pool_tiles(self, pool: str) -> Tuple[List[UnitImage], np.ndarray]:
        if pool == "tiles":
            records = read_tile_manifest(self.pool_dir("tiles") / "manifest.csv")
            tiles = [self._stored_tile(rec) for rec in records]
            return tiles, np.full(len(tiles), -1, dtype=np.int64)
        return split_labels(load_corpus(self.pool_dir(pool), self.catalog))

    def _stored_tile(self, record: Tuple[str, int, int, str]) -> UnitImage:
        source_id, row, col, rel = record
        image = read_png(self.pool_dir("tiles") / rel)
        return UnitImage(image.pixels, row, col, source_id)

    @staticmethod
    def _tile_key(t: UnitImage, pool: str) -> str:
        return t.tile_id if pool == "tiles" else t.source_id

    # Stages

    def synth(self) -> None:
        """Classifier corpus, normal GAN/SVM pool, held-out pool and raw strips."""
        cfg = self.corpus_config
        make_corpus(cfg, self.corpus_dir, catalog=self.catalog)
        make_corpus(cfg, self.pool_dir("train"), counts={NORMAL: cfg.gan_normal}, stream=GAN_STREAM, catalog=self.catalog)
        holdout = {NORMAL: cfg.holdout_normal, **split_evenly(cfg.holdout_defect, DEFECT_CLASSES)}
        make_corpus(cfg, self.pool_dir("holdout"), counts=holdout, stream=HOLDOUT_STREAM, catalog=self.catalog)

        rows = []
        for i in range(cfg.strips):
            strip = gen_strip(cfg, i)
            write_png(self.raw_dir / f"{strip.raw.source_id}.png", strip.raw)
            kinds = ";".join(f"{kind}@{x}" for kind, x in strip.defects)
            rows.append([strip.raw.source_id, kinds, strip.background_columns[0], strip.background_columns[1]])
        write_csv(self.raw_dir / "strips.csv", ["source_id", "defects", "background_start", "background_stop"], rows)
        logger.info("Synthetic data written", corpus=str(self.corpus_dir), strips=cfg.strips, holdout=sum(holdout.values()))

    def tile(self) -> None:
        """Cut every raw PNG into unit images and write tiles/manifest.csv."""
        sources = sorted(self.raw_dir.glob("*.png")) if self.raw_dir.is_dir() else []
        if not sources:
            raise FormatError(f"No raw PNG images in {self.raw_dir}")
        images = [_to_channels(read_png(p), self.net_config.input_channels) for p in sources]

        out = self.pool_dir("tiles")
        records = []
        for raw in images:
            grid, tiles = tile(raw, self.tile_side, self.policy)
            for t in tiles:
                rel = f"{raw.source_id}/{t.tile_id}.png"
                write_png(out / rel, t.pixels)
                records.append((raw.source_id, t.row, t.col, rel))
            logger.debug("Image tiled", source_id=raw.source_id, rows=grid.rows, cols=grid.cols)
        write_tile_manifest(out / "manifest.csv", records)
        logger.info("Tiles written", images=len(images), tiles=len(records), policy=self.policy.value)

    def train_classifier(self) -> None:
        tiles, labels = split_labels(load_corpus(self.corpus_dir, self.catalog))
        net_config = self.net_config.with_depth(self.classifier_depth)
        key_classes = sorted(self.catalog.anomalous_set)
        names = list(self.catalog.names)
        classifier = build_classifier(net_config, self.catalog, self.seed)
        target = self.model_path("classifier")
        try:
            classifier, report = train_classifier(
                classifier, tiles, labels, self.cls_config, names, key_classes, checkpoint_path=target
            )
        except TrainingDivergedError as e:
            if e.report is not None:
                e.report.write(self.path("reports", "classifier.yaml"))
            raise
        checkpoint(classifier, target)
        report.metrics["layers"] = layer_census(classifier)
        report.write(self.path("reports", "classifier.yaml"))
        cm = ConfusionMatrix.from_counts(report.metrics["confusion"])
        write_confusion(
            cm, names, self.path("reports", "classifier_confusion.csv"), self.path("reports", "classifier_confusion.txt")
        )

        if self.learning_sizes:
            points = learning_curve(
                lambda seed: build_classifier(net_config, self.catalog, seed),
                tiles,
                labels,
                self.learning_sizes,
                self.cls_config,
                names,
                key_classes,
            )
            write_csv(self.path("reports", "learning_curve.csv"), LEARNING_CURVE_HEADER, [p.row() for p in points])

    def train_gan(self) -> None:
        tiles, labels = split_labels(load_corpus(self.pool_dir("train"), self.catalog))
        normal = self.catalog.index(NORMAL) if NORMAL in self.catalog.names else 0
        normal_tiles = [t for t, y in zip(tiles, labels) if y == normal]
        generator = build_generator(self.net_config, self.seed)
        discriminator = build_discriminator(self.net_config, self.seed)
        try:
            generator, discriminator, report = train_gan(generator, discriminator, normal_tiles, self.gan_config)
        except TrainingDivergedError as e:
            if e.report is not None:
                e.report.write(self.path("reports", "gan.yaml"))
            raise
        checkpoint(generator, self.model_path("generator"))
        checkpoint(discriminator, self.model_path("discriminator"))
        report.metrics["generator_layers"] = layer_census(generator)
        report.metrics["discriminator_layers"] = layer_census(discriminator)
        report.metrics["feature_dim"] = self.net_config.feature_dim()
        report.write(self.path("reports", "gan.yaml"))

    def features(self) -> None:
        """Discriminator features for every available pool, with a tile index CSV."""
        _require(self.model_path("discriminator"))
        pools = self._available_pools("features")
        discriminator = restore(self.model_path("discriminator"))
        for pool in pools:
            tiles, labels = self._pool_tiles(pool)
            values = feature_array(discriminator, stack_tiles(discriminator, tiles))
            write_features(self.path("features", f"{pool}.fvec"), values)
            write_csv(
                self.path("features", f"{pool}.csv"),
                INDEX_HEADER,
                [[self._tile_key(t, pool), int(y)] for t, y in zip(tiles, labels)],
            )
            logger.info("Features written", pool=pool, tiles=len(tiles), dim=int(values.shape[1]))

    def fit_svm(self) -> None:
        """Fit on the normal pool and calibrate (min v, max v) on the same pool."""
        source = self.path("features", "train.fvec")
        _require(source)
        features = read_features(source)
        p = self.ocsvm_params
        model = fit(features, nu=p.nu, gamma=p.gamma, tol=p.tol, max_iter=p.max_iter, standardize=p.standardize)
        model = calibrate(model, features)
        write_model(self.model_path("ocsvm"), model)

        v = decision_batch(model, features)
        summary = {
            "n_train": model.n_train,
            "support_vectors": int(model.alphas.size),
            "support_fraction": model.alphas.size / model.n_train,
            "outlier_fraction": float(np.mean(v < 0)),
            "nu": model.nu,
            "gamma": model.gamma,
            "rho": model.rho,
            "calib_min_v": model.calib_min_v,
            "calib_max_v": model.calib_max_v,
            "converged": model.converged,
            "n_iter": model.n_iter,
        }
        atomic_write_text(self.path("reports", "ocsvm.yaml"), yaml.safe_dump(plain(summary), sort_keys=False))

    def score(self) -> None:
        _require(self.model_path("ocsvm"))
        model = read_model(self.model_path("ocsvm"))
        for pool in self._available_pools("score"):
            features = read_features(self.path("features", f"{pool}.fvec"))
            index = _read_rows(self.path("features", f"{pool}.csv"))
            if len(index) != features.shape[0]:
                raise FormatError(f"{pool}: {features.shape[0]} feature rows but {len(index)} index rows")
            scores = score_batch(model, features, recalibrate=self.ocsvm_params.recalibrate)
            rows = [[row["tile_id"], row["label"], s.raw_v, s.eq1_score, s.norm_score] for row, s in zip(index, scores)]
            write_csv(self.path("scores", f"{pool}.csv"), SCORE_HEADER, rows)
            norms = [s.norm_score for s in scores]
            logger.info("Scores written", pool=pool, tiles=len(rows), min_norm=min(norms), max_norm=max(norms))

    def map(self) -> None:
        """Heatmap and overlay per raw image from the tiles stage output."""
        manifest = self.pool_dir("tiles") / "manifest.csv"
        _require(manifest, self.model_path("classifier"), self.model_path("discriminator"), self.model_path("ocsvm"))
        classifier = restore(self.model_path("classifier"))
        discriminator = restore(self.model_path("discriminator"))
        model = read_model(self.model_path("ocsvm"))
        params = self.map_params

        by_source: "OrderedDict[str, List[UnitImage]]" = OrderedDict()
        for record in read_tile_manifest(manifest):
            by_source.setdefault(record[0], []).append(self._stored_tile(record))

        rows = []
        for source_id, tiles in by_source.items():
            tiles.sort(key=lambda t: (t.row, t.col))
            n_rows, n_cols = tiles[-1].row + 1, tiles[-1].col + 1
            side = tiles[0].side
            if len(tiles) != n_rows * n_cols:
                raise FormatError(f"{source_id}: {len(tiles)} tiles do not fill a {n_rows}x{n_cols} grid")
            grid = TileGrid(n_rows, n_cols, side, self.policy, n_rows * side, n_cols * side)

            probs = classify_array(classifier, stack_tiles(classifier, tiles))
            features = feature_array(discriminator, stack_tiles(discriminator, tiles))
            scores = score_batch(model, features, recalibrate=self.ocsvm_params.recalibrate)
            norms = [s.norm_score for s in scores]
            af = anomalous_features(probs, norms, params.catalog, source_id)
            predicted = probs.argmax(axis=1)
            afmap = build_map(grid, af, params.display_scale, source_id, background_flags(predicted, params.catalog))

            heat = render(afmap, smooth=params.smooth, legend=params.legend)
            overlay = render(afmap, params.alpha, untile(grid, tiles), params.smooth, params.legend)
            write_png(self.path("maps", f"{source_id}_heat.png"), heat)
            write_png(self.path("maps", f"{source_id}_overlay.png"), overlay)

            mass = probs[:, sorted(params.catalog.anomalous_set)].sum(axis=1)
            for t, c, m, s, a in zip(tiles, predicted, mass, norms, afmap.af):
                rows.append([source_id, t.row, t.col, params.catalog.names[int(c)], float(m), s, float(a)])
            logger.info("Map rendered", source_id=source_id, rows=n_rows, cols=n_cols, peak_af=afmap.peak)
        write_csv(self.path("maps", "af.csv"), AF_HEADER, rows)

    def montage(self) -> None:
        """Tile montages of the held-out pool and raw/map pair sheets."""
        scores_path = self.path("scores", "holdout.csv")
        _require(scores_path, self.pool_dir("holdout") / "manifest.csv")
        tiles, _ = self._pool_tiles("holdout")
        norm = {row["tile_id"]: float(row["norm_score"]) for row in _read_rows(scores_path)}
        missing = [t.source_id for t in tiles if t.source_id not in norm]
        if missing:
            raise FormatError(f"{len(missing)} held-out tiles have no score, e.g. {missing[0]}")
        values = [norm[t.source_id] for t in tiles]
        k = min(self.map_params.montage_k, len(tiles))
        if k < self.map_params.montage_k:
            logger.warning("Montage size reduced to pool size", requested=self.map_params.montage_k, k=k)

        for order in MontageOrder:
            sheet = montage(tiles, values, k, order)
            write_png(self.path("montage", f"{order.value}.png"), sheet)
            picked = rank_tiles(tiles, values, k, order)
            write_csv(
                self.path("montage", f"{order.value}.csv"),
                ["rank", "tile_id", "norm_score"],
                [[rank + 1, tiles[i].source_id, values[i]] for rank, i in enumerate(picked)],
            )

        af_path = self.path("maps", "af.csv")
        if not af_path.exists():
            logger.info("No maps found; pair montage skipped", maps=str(af_path.parent))
            return
        peaks: "OrderedDict[str, float]" = OrderedDict()
        for row in _read_rows(af_path):
            peaks[row["source_id"]] = max(peaks.get(row["source_id"], 0.0), float(row["af"]))
        heats = [read_png(self.path("maps", f"{s}_heat.png"), s) for s in peaks]
        sources = [self._source_image(s) for s in peaks]
        for order in MontageOrder:
            sheet = pair_montage(sources, heats, list(peaks.values()), order=order)
            write_png(self.path("montage", f"pairs_{order.value}.png"), sheet)
        logger.info("Pair montages written", images=len(sources))

    def _source_image(self, source_id: str) -> RawImage:
        path = self.raw_dir / f"{source_id}.png"
        if not path.exists():
            raise FormatError(f"Raw image for map {source_id} not found at {path}")
        return read_png(path, source_id)

    def hist(self) -> None:
        """raw_v histograms per scored pool."""
        pools = [p for p in POOLS if self.path("scores", f"{p}.csv").exists()]
        if not pools:
            raise FormatError(f"No score files under {self.path('scores')}; run score first")
        for pool in pools:
            values = [float(row["raw_v"]) for row in _read_rows(self.path("scores", f"{pool}.csv"))]
            bins = histogram(values, self.map_params.hist_bin_width)
            write_histogram_csv(self.path("hist", f"{pool}.csv"), bins)
            plot_histogram(self.path("hist", f"{pool}.png"), bins, title=f"Decision values: {pool}")
            logger.info("Histogram written", pool=pool, **side_totals(bins))

    def evaluate(self) -> None:
        """Held-out ROC-AUC, per-class score summary and classifier confusion."""
        scores_path = self.path("scores", "holdout.csv")
        _require(scores_path)
        rows = _read_rows(scores_path)
        labels = np.asarray([int(r["label"]) for r in rows], dtype=np.int64)
        norm = np.asarray([float(r["norm_score"]) for r in rows])
        raw_v = np.asarray([float(r["raw_v"]) for r in rows])
        normal = self.catalog.index(NORMAL) if NORMAL in self.catalog.names else 0
        defect = labels != normal

        result: Dict[str, object] = {
            "tiles": int(labels.size),
            "normal_tiles": int((~defect).sum()),
            "defect_tiles": int(defect.sum()),
            "roc_auc": roc_auc(norm[~defect], norm[defect]),
            "defect_negative_fraction": float(np.mean(raw_v[defect] < 0)) if defect.any() else None,
            "normal_negative_fraction": float(np.mean(raw_v[~defect] < 0)) if (~defect).any() else None,
            "score_summary": score_summary(norm, labels, self.catalog.names),
        }

        if self.model_path("classifier").exists():
            classifier = restore(self.model_path("classifier"))
            tiles, true = self._pool_tiles("holdout")
            predicted = classify_array(classifier, stack_tiles(classifier, tiles)).argmax(axis=1)
            cm = confusion(true, predicted, self.catalog.size)
            names = list(self.catalog.names)
            write_confusion(cm, names, self.path("reports", "holdout_confusion.csv"), self.path("reports", "holdout_confusion.txt"))
            result["classifier"] = class_report(cm, names, sorted(self.catalog.anomalous_set)).to_dict()

        atomic_write_text(self.path("reports", "eval.yaml"), yaml.safe_dump(plain(result), sort_keys=False))
        logger.info("Evaluation written", roc_auc=round(result["roc_auc"], 4), defect_negative_fraction=result["defect_negative_fraction"])
