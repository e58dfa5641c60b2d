try:
    import importlib.resources as pkg_resources
except ImportError:  # pragma: no cover
    # backport
    import importlib_resources as pkg_resources

from jinja2 import Template

from fracfilter import assets


def comma_separated(values):
    return ', '.join([repr(v) for v in values])


def render_asset(name, **params):
    """Renders a Jinja2 template stored in the fracfilter.assets package
    """
    source = pkg_resources.read_text(assets, name)
    template = Template(source,
                        keep_trailing_newline=True,
                        trim_blocks=True,
                        lstrip_blocks=True)
    return template.render(**params)
