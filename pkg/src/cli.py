"""
命令行入口

    python -m src.cli validate beam.json
    python -m src.cli spectrum bvp.json --window=-50,50 --format csv --out zeros.csv
    python -m src.cli compare bvp.json --reference bvp0.json --window 0,200

退出码：0 成功，1 输入校验失败，2 数值失败（compare 计数不一致同样返回 2）
"""

import argparse
import json
import logging
import sys
from typing import List, Optional, Tuple

from .config_loader import get_config_loader, get_setting
from .errors import DiracSpecError, ValidationError
from .pipeline import RunConfig, get_pipeline, pipeline_map
from .tools.report_writer import write_report

logger = logging.getLogger(__name__)


def parse_window(text: str) -> Tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"窗口格式应为 a,b: {text!r}") from e
    return a, b


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracspec", description="Dirac 型边值问题的谱分析")
    parser.add_argument("--config", default=None, help="配置文件路径")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="提高日志级别（可重复）")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in pipeline_map:
        cmd = sub.add_parser(name)
        cmd.add_argument("input", help="规格文件（dirac-bvp/1 或 tim-beam/1）")
        cmd.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
        cmd.add_argument("--out", default=None, help="输出路径，缺省写到标准输出")
        if name in ("spectrum", "compare", "timoshenko"):
            cmd.add_argument("--window", type=parse_window, required=True, help="实部区间 a,b")
            cmd.add_argument("--strip", type=float, default=None, help="带宽 h")
            cmd.add_argument("--tol", type=float, default=None, help="根的容限")
            cmd.add_argument("--jobs", type=int, default=None, help="并行线程数")
        if name == "compare":
            cmd.add_argument("--reference", required=True, help="参考问题的规格文件")
    return parser


def _configure_logging(verbose: int):
    level = str(get_setting("log_level")).upper()
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        get_config_loader(args.config)
    _configure_logging(args.verbose)
    if getattr(args, "jobs", None):
        get_config_loader().update_settings(jobs=args.jobs)

    try:
        config = RunConfig(command=args.command, input=args.input, reference=getattr(args, "reference", None),
                           window=getattr(args, "window", None), strip=getattr(args, "strip", None),
                           tol=getattr(args, "tol", None), fmt=args.fmt, out=args.out,
                           jobs=getattr(args, "jobs", None))
        result = get_pipeline(config.command)(config)
    except DiracSpecError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        print(json.dumps(e.to_dict(), sort_keys=True, ensure_ascii=False), file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error("文件错误: %s", e)
        print(json.dumps({"error": type(e).__name__, "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return ValidationError.exit_code

    text = write_report(result, config.fmt, config.out)
    if config.out is None:
        sys.stdout.write(text)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
