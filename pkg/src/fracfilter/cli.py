import json
from pathlib import Path

import click
import numpy as np

from fracfilter import __version__
from fracfilter import _io, synthetic
from fracfilter._format import render_asset
from fracfilter.bench import run_bench
from fracfilter.commons import as_image
from fracfilter.commons.parallel import map_threads_progress
from fracfilter.config import DEFAULT_CONFIG_FILE, RunConfig
from fracfilter.detect import (LogisticModel, fixed_threshold, otsu_threshold,
                               predict_map, sample_patches_many,
                               train_logistic)
from fracfilter.enum import Engine, Matcher
from fracfilter.evaluate import dataset_metrics, metrics_to_dict, pr_curve
from fracfilter.exceptions import (ConfigurationError, DataError,
                                   InvalidArgumentError)
from fracfilter.fdif import fdif_steps, stylize
from fracfilter.fracnn import fracnn_layers

# click uses 2 for usage errors, 2 is reserved for data errors here
USAGE_EXIT_CODE = 1


class _UsageExitCode:

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name,
                                        args,
                                        parent=parent,
                                        **extra)
        except click.UsageError as e:
            e.exit_code = USAGE_EXIT_CODE
            raise


class Command(_UsageExitCode, click.Command):
    pass


class Group(_UsageExitCode, click.Group):
    command_class = Command

    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as e:
            e.exit_code = USAGE_EXIT_CODE
            raise


def engine_steps(img, cfg):
    """Iterates over the intermediate outputs of the configured engine
    """
    if cfg.engine is Engine.fdif:
        return fdif_steps(img, cfg.fdif)

    if cfg.engine is Engine.fracnn:
        return fracnn_layers(img, cfg.fracnn, threads=cfg.threads)

    return iter([as_image(img)])


def extract_features(img, cfg):
    """Feature image of the configured engine, clipped to [0, 1]
    """
    current = img

    for current in engine_steps(img, cfg):
        pass

    return np.clip(current, 0.0, 1.0)


def _load_config(config_path=None,
                 engine=None,
                 iterations=None,
                 depth=None,
                 bank_size=None,
                 kernel_side=None,
                 alpha=None,
                 scales=None,
                 seed=None,
                 threshold=None,
                 otsu=False,
                 patch_side=None,
                 n_patches=None,
                 epochs=None,
                 learning_rate=None,
                 d_max=None,
                 matcher=None,
                 n_thresholds=None):
    overrides = {
        'engine': engine,
        'seed': seed,
        'fdif': {
            'iterations': iterations,
            'kernel_side': kernel_side,
            'scales': scales,
        },
        'fracnn': {
            'depth': depth,
            'bank_size': bank_size,
            'kernel_side': kernel_side,
        },
        'detect': {
            'threshold': threshold,
            # an unset flag must not override otsu: true in the file
            'otsu': otsu or None,
            'patch_side': patch_side,
            'n_patches': n_patches,
            'epochs': epochs,
            'learning_rate': learning_rate,
        },
        'eval': {
            'd_max': d_max,
            'matcher': matcher,
            'n_thresholds': n_thresholds,
        },
    }

    cfg = RunConfig.load(config_path, overrides)

    if alpha is None:
        return cfg

    # the exponent belongs to whichever engine runs
    if cfg.engine is Engine.raw:
        raise ConfigurationError('--alpha does not apply to the raw engine')

    overrides[cfg.engine.value]['alpha'] = alpha
    return RunConfig.load(config_path, overrides)


def engine_options(fn):
    """Options shared by every command that runs a feature extractor
    """
    options = [
        click.option('--engine',
                     '-e',
                     type=click.Choice(Engine.get_values()),
                     default=None,
                     help='Feature extractor (default: fdif)'),
        click.option('--iterations',
                     type=int,
                     default=None,
                     help='FDIF iterations'),
        click.option('--depth',
                     type=int,
                     default=None,
                     help='FraCNN layer pairs'),
        click.option('--bank-size',
                     type=int,
                     default=None,
                     help='Number of line kernels in the FraCNN bank'),
        click.option('--kernel-side',
                     type=int,
                     default=None,
                     help='Side of the line kernels (odd)'),
        click.option('--alpha',
                     type=float,
                     default=None,
                     help='Fixed exponent of the power normalization'),
        click.option('--scales',
                     type=int,
                     default=None,
                     help='Number of radii used to estimate the fractal '
                     'dimension'),
        click.option('--seed', type=int, default=None, help='Random seed'),
        click.option('--config',
                     'config_path',
                     type=click.Path(dir_okay=False),
                     default=None,
                     help=f'Config file (default: {DEFAULT_CONFIG_FILE} '
                     'if it exists)'),
        click.option('--quiet',
                     '-q',
                     is_flag=True,
                     help='Do not show progress bars'),
    ]

    for option in reversed(options):
        fn = option(fn)

    return fn


def _collect_images(inputs):
    paths = []

    for input_ in inputs:
        paths.extend(_io.list_images(input_))

    if not paths:
        raise DataError('No PNG or PGM images found in: '
                        f'{", ".join(inputs)}')

    return paths


def _targets(paths, output, suffix):
    """Output file for every input, output is a file (single input with an
    image extension) or a directory
    """
    if output is not None and Path(
            output).suffix.lower() in _io.IMAGE_SUFFIXES:
        if len(paths) != 1:
            raise InvalidArgumentError(
                f'Got {len(paths)} input images but --output {output!r} is '
                'a single file. Pass a directory instead')

        return [(paths[0], Path(output))]

    directory = Path(output or '.')
    targets = [(p, directory / f'{p.stem}{suffix}{p.suffix}') for p in paths]
    _io.check_unique([p for p, _ in targets],
                     key=lambda p: f'{p.stem}{p.suffix}')
    return targets


def _done(targets):
    directories = sorted({str(t.parent) for t in targets})
    click.echo(f'Done. Wrote {len(targets)} file(s) to '
               f'{", ".join(directories)}')


@click.group(cls=Group)
@click.version_option(version=__version__)
def cli():
    """
    fracfilter enhances and detects curves in images with fractal dimension
    invariant filtering (FDIF) and its CNN counterpart (FraCNN).

    Example (filter an image, then detect curves):

    $ fracfilter filter image.png --engine fracnn -o out/

    $ fracfilter detect image.png --engine fracnn --otsu -o out/
    """
    pass


@cli.command()
def init():
    """
    Create a fracfilter.yaml with the default settings

    Example: fracfilter init
    """
    path = Path(DEFAULT_CONFIG_FILE)

    if path.exists():
        raise ConfigurationError(f'{DEFAULT_CONFIG_FILE!r} already exists. '
                                 'Delete it or edit it directly.')

    hints = RunConfig.hints()
    path.write_text(
        render_asset('fracfilter.yaml',
                     engine=hints.pop('engine'),
                     seed=hints.pop('seed'),
                     engines=Engine.get_values(),
                     sections=hints))
    click.echo(f'Done. Saved default configuration to {str(path)!r}')


@cli.command(name='filter')
@click.argument('inputs', nargs=-1, required=True)
@click.option('--output',
              '-o',
              default=None,
              help='Output file (single input) or directory')
@click.option('--save-steps',
              is_flag=True,
              help='Also write the output of every iteration/layer pair')
@engine_options
def filter_(inputs, output, save_steps, quiet, **options):
    """
    Filter images, writing <name>_<engine> outputs

    Example: fracfilter filter images/ --engine fracnn --depth 3 -o out/
    """
    cfg = _load_config(**options)
    targets = _targets(_collect_images(inputs), output,
                       f'_{cfg.engine.value}')

    def process(pair):
        path, target = pair
        steps = list(engine_steps(_io.read_image(path), cfg))

        if save_steps:
            for i, step in enumerate(steps, start=1):
                _io.write_image(
                    target.with_name(f'{target.stem}_step{i}{target.suffix}'),
                    np.clip(step, 0.0, 1.0))

        return _io.write_image(target, np.clip(steps[-1], 0.0, 1.0))

    written = map_threads_progress(process,
                                   targets,
                                   threads=cfg.threads,
                                   desc='filter',
                                   quiet=quiet)
    _done(written)


@cli.command()
@click.argument('inputs', nargs=-1, required=True)
@click.option('--output', '-o', default=None, help='Output directory')
@click.option('--model',
              '-m',
              type=click.Path(dir_okay=False),
              default=None,
              help='Logistic model (from "fracfilter train"), thresholds '
              'the features if missing')
@click.option('--threshold',
              type=float,
              default=None,
              help='Fixed threshold in [0, 1] (default: 0.1)')
@click.option('--otsu', is_flag=True, help="Use Otsu's threshold instead")
@engine_options
def detect(inputs, output, model, quiet, **options):
    """
    Detect curves, writing binary maps (and probability maps when using a
    model)

    Example: fracfilter detect images/ --engine fracnn --otsu -o out/
    """
    cfg = _load_config(**options)
    model = None if model is None else LogisticModel.load(model)
    targets = _targets(_collect_images(inputs), output or '.',
                       f'_{cfg.engine.value}')

    def process(pair):
        path, target = pair
        features = extract_features(_io.read_image(path), cfg)
        written = []

        if model is not None:
            prob = predict_map(model, features)
            written.append(
                _io.write_image(
                    target.with_name(f'{target.stem}_prob{target.suffix}'),
                    prob))
            binary = (prob > 0.5).astype(np.uint8)
        elif cfg.detect.otsu:
            binary = otsu_threshold(features)
        else:
            binary = fixed_threshold(features, cfg.detect.threshold)

        written.append(
            _io.write_image(
                target.with_name(f'{target.stem}_binary{target.suffix}'),
                binary))
        return written

    written = map_threads_progress(process,
                                   targets,
                                   threads=cfg.threads,
                                   desc='detect',
                                   quiet=quiet)
    _done([path for paths in written for path in paths])


@cli.command()
@click.argument('images_dir')
@click.argument('gt_dir')
@click.option('--output',
              '-o',
              default='model.txt',
              help='Where to save the model')
@click.option('--n-patches',
              type=int,
              default=None,
              help='Number of training patches (default: 80000)')
@click.option('--patch-side',
              type=int,
              default=None,
              help='Side of the patches (odd, default: 9)')
@click.option('--epochs', type=int, default=None)
@click.option('--learning-rate', type=float, default=None)
@engine_options
def train(images_dir, gt_dir, output, quiet, **options):
    """
    Train the logistic detection head on images with ground truth (paired
    by file name)

    Example: fracfilter train data/images data/gt --engine fracnn
    """
    cfg = _load_config(**options)
    pairs = _io.pair_by_stem(images_dir, gt_dir)

    def load(pair):
        stem, image_path, gt_path = pair
        features = extract_features(_io.read_image(image_path), cfg)
        gt = _io.read_mask(gt_path)

        if features.shape != gt.shape:
            raise DataError(f'Image and ground truth {stem!r} have '
                            f'different shapes: {features.shape} and '
                            f'{gt.shape}')

        return features, gt

    data = map_threads_progress(load,
                                pairs,
                                threads=cfg.threads,
                                desc='features',
                                quiet=quiet)
    patches = sample_patches_many(data,
                                  side=cfg.detect.patch_side,
                                  n=cfg.detect.n_patches,
                                  seed=cfg.seed)
    model = train_logistic(patches,
                           epochs=cfg.detect.epochs,
                           learning_rate=cfg.detect.learning_rate)
    model.save(output)

    click.echo(f'Final loss: {model.losses[-1]:.6f}, training accuracy: '
               f'{model.accuracy(patches):.4f}')
    click.echo(f'Done. Saved model to {str(output)!r}')


@cli.command(name='eval')
@click.argument('pred_dir')
@click.argument('gt_dir')
@click.option('--output',
              '-o',
              default='metrics.json',
              help='Where to save the metrics (JSON)')
@click.option('--dmax',
              'd_max',
              type=float,
              default=None,
              help='Matching distance in pixels (default: 2)')
@click.option('--matcher',
              type=click.Choice(Matcher.get_values()),
              default=None,
              help='Pixel correspondence (default: optimal)')
@click.option('--n-thresholds',
              type=int,
              default=None,
              help='Size of the uniform threshold grid (default: 99)')
@click.option('--suffix',
              default='',
              help='Only use predictions whose name ends with this suffix '
              '(e.g., _fracnn_prob), removed before pairing')
@click.option('--engine',
              '-e',
              type=click.Choice(Engine.get_values()),
              default=None,
              help='Engine that produced the predictions (reported only)')
@click.option('--config',
              'config_path',
              type=click.Path(dir_okay=False),
              default=None)
@click.option('--quiet', '-q', is_flag=True)
def eval_(pred_dir, gt_dir, output, suffix, quiet, **options):
    """
    Compute ODS, OIS and AP of probability (or binary) maps against ground
    truth, paired by file name

    Example: fracfilter eval out/ data/gt --dmax 2
    """
    cfg = _load_config(**options)
    pairs = _io.pair_by_stem(pred_dir, gt_dir, suffix=suffix)

    if not pairs:
        raise DataError(f'No images found in {pred_dir!r}')

    loaded, problems = [], []

    for stem, pred_path, gt_path in pairs:
        prob, gt = _io.read_image(pred_path), _io.read_mask(gt_path)

        if prob.shape != gt.shape:
            problems.append(f'{pred_path}: shape {prob.shape} does not '
                            f'match ground truth {gt_path} {gt.shape}')
        else:
            loaded.append((stem, prob, gt))

    if problems:
        for problem in problems:
            click.secho(problem, err=True, fg='red')

        raise DataError(f'{len(problems)} prediction(s) do not match the '
                        'shape of their ground truth')

    thresholds = cfg.eval.thresholds

    def curve(item):
        _, prob, gt = item
        return pr_curve(prob,
                        gt,
                        thresholds,
                        d_max=cfg.eval.d_max,
                        matcher=cfg.eval.matcher)

    curves = map_threads_progress(curve,
                                  loaded,
                                  threads=cfg.threads,
                                  desc='eval',
                                  quiet=quiet)
    names = [stem for stem, _, _ in loaded]
    summary = metrics_to_dict(dataset_metrics(curves),
                              names=names,
                              engine=cfg.engine.value,
                              matcher=cfg.eval.matcher.value,
                              d_max=cfg.eval.d_max,
                              thresholds=[float(t) for t in thresholds])

    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(json.dumps(summary, indent=2))

    width = max(len(n) for n in names + ['image', summary['engine']])
    click.echo(
        render_asset('metrics_table.txt',
                     width=width,
                     n_thresholds=len(thresholds),
                     **summary))
    click.echo(f'Done. Saved metrics to {str(output)!r}')


@cli.command(name='stylize')
@click.argument('inputs', nargs=-1, required=True)
@click.option('--output',
              '-o',
              default=None,
              help='Output file (single input) or directory')
@click.option('--iterations',
              type=int,
              default=None,
              help='FDIF iterations (default: 3)')
@click.option('--kernel-side', type=int, default=None)
@click.option('--scales', type=int, default=None)
@click.option('--config',
              'config_path',
              type=click.Path(dir_okay=False),
              default=None)
@click.option('--quiet', '-q', is_flag=True)
def stylize_(inputs, output, quiet, **options):
    """
    Enhance strokes and suppress textures with FDIF, keeping the mean
    intensity of every image

    Example: fracfilter stylize photo.png --iterations 3 -o styled.png
    """
    cfg = _load_config(**options)
    targets = _targets(_collect_images(inputs), output, '_stylized')

    def process(pair):
        path, target = pair
        out, saturated = stylize(_io.read_image(path), cfg.fdif)

        if saturated:
            click.secho(
                f'{path}: the filtered image is too dark to reach the '
                'mean intensity of the input, output is darker',
                fg='yellow',
                err=True)

        return _io.write_image(target, out)

    written = map_threads_progress(process,
                                   targets,
                                   threads=cfg.threads,
                                   desc='stylize',
                                   quiet=quiet)
    _done(written)


@cli.command()
@click.option('--size', default=512, show_default=True, help='Image side')
@click.option('--bank-size', default=30, show_default=True)
@click.option('--repeat', default=3, show_default=True)
@click.option('--threads',
              default=1,
              show_default=True,
              help='Worker threads for the bank convolutions')
@click.option('--seed', default=0, show_default=True)
def bench(size, bank_size, repeat, threads, seed):
    """
    Time the convolution layer for N and N / 2 kernels, and one FDIF
    iteration against one FraCNN layer pair

    Example: fracfilter bench --size 512 --bank-size 30
    """
    report = run_bench(size=size,
                       bank_size=bank_size,
                       repeat=repeat,
                       threads=threads,
                       seed=seed)

    for name, seconds in report.rows():
        click.echo(f'{name:<28}{seconds:10.4f} s')

    click.echo(f'Ratio N={bank_size} / N={bank_size // 2}: '
               f'{report.ratio:.2f}')


@cli.command()
@click.argument('output')
@click.option('--kind',
              type=click.Choice(['curves', 'koch', 'photo']),
              default='curves',
              show_default=True)
@click.option('--n', 'n', default=10, show_default=True, help='Images')
@click.option('--size', default=128, show_default=True, help='Image side')
@click.option('--noise',
              default=0.03,
              show_default=True,
              help='Noise standard deviation (curves only)')
@click.option('--n-curves', default=3, show_default=True)
@click.option('--seed', default=0, show_default=True)
def synth(output, kind, n, size, noise, n_curves, seed):
    """
    Generate synthetic images: curves over texture (with ground truth in
    gt/), a Von Koch curve or photo-like images

    Example: fracfilter synth data/ --kind curves --n 10
    """
    output = Path(output)

    if kind == 'curves':
        written = synthetic.write_dataset(output,
                                          n=n,
                                          shape=(size, size),
                                          seed=seed,
                                          noise=noise,
                                          n_curves=n_curves)
        written = [path for pair in written for path in pair]
    elif kind == 'koch':
        written = [
            _io.write_image(output / 'koch.png',
                            synthetic.koch_raster(size=size))
        ]
    else:
        seeds = np.random.SeedSequence(seed).spawn(n)
        written = [
            _io.write_image(output / f'photo_{i:03d}.png',
                            synthetic.photo_image((size, size), seed=child))
            for i, child in enumerate(seeds)
        ]

    _done(written)


if __name__ == '__main__':
    cli()
