# main.py
# -*- coding: utf-8 -*-
"""
命令行入口。

    python main.py describe  --config config/scenarios/fig1.yaml
    python main.py analyze   --config config/scenarios/grid.yaml --out out/
    python main.py simulate  --config config/scenarios/fig2.yaml --seed 7 --scale desk
    python main.py mixing    --config config/scenarios/grid.yaml
    python main.py run       --config config/scenarios/minimal.yaml
    python main.py reproduce fig1 --scale desk --threads 4

退出码：0 正常，1 配置 / 校验错误，2 资源上限或数值错误。
"""

import argparse
import datetime
import logging
import os
import sys

from core import settings
from core.config_loader import load_config, load_topology
from core.describe import summarize
from core.errors import CsmaError
from core.orchestrator import ExperimentOrchestrator
from core.reproduce import FIGURES, reproduce
from topology.graph import build_topology

# ==== 以 main.py 所在目录为基准（解决工作目录不一致问题）====
BASE_DIR = os.path.dirname(os.path.abspath(__file__))

logger = logging.getLogger("csma_delay")

# 各子命令要跑的部分
SUBCOMMAND_PARTS = {
    "analyze": ("stationary", "mixing", "bounds"),
    "simulate": ("simulation",),
    "mixing": ("mixing",),
    "run": ("stationary", "mixing", "bounds", "simulation"),
}


def setup_logging(verbose: bool = False):
    """控制台 + 当天的运行日志 data/logs/run_YYYYMMDD.txt；日志文件打不开不影响运行。"""
    level = logging.DEBUG if verbose else getattr(logging, str(settings.get("logging", "level")).upper(), logging.INFO)
    fmt = logging.Formatter("[%(asctime)s] %(levelname)s %(message)s", "%Y-%m-%d %H:%M:%S")
    root = logging.getLogger()
    root.setLevel(level)
    for h in list(root.handlers):
        root.removeHandler(h)

    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(fmt)
    root.addHandler(console)

    try:
        log_dir = os.path.join(BASE_DIR, settings.get("logging", "log_dir"))
        os.makedirs(log_dir, exist_ok=True)
        filename = f"run_{datetime.datetime.now().strftime('%Y%m%d')}.txt"
        file_handler = logging.FileHandler(os.path.join(log_dir, filename), encoding="utf-8")
        file_handler.setFormatter(fmt)
        root.addHandler(file_handler)
    except OSError:
        # 日志文件失败不影响计算
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csma_delay", description="CSMA 随机接入网络的时延下界分析与仿真")
    parser.add_argument("--verbose", "-v", action="store_true", help="输出 DEBUG 日志")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        if need_config:
            p.add_argument("--config", required=True, help="实验配置 YAML")
        p.add_argument("--out", default=None, help="输出目录（缺省取配置里的 output.dir）")
        p.add_argument("--seed", type=int, default=None, help="覆盖配置里的 seeds，只跑这一个")
        p.add_argument("--scale", choices=["desk", "full"], default=None, help="仿真规模")
        p.add_argument("--threads", type=int, default=1, help="并行的负载点数")
        p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("describe", help="打印拓扑概况")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="给出时导出邻接表文本")
    p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    for name, text in (
        ("analyze", "乘积形式 + 全部下界"),
        ("simulate", "仿真平均队长"),
        ("mixing", "精确混合时间"),
        ("run", "按配置跑全部开启的部分"),
    ):
        common(sub.add_parser(name, help=text))

    p = sub.add_parser("reproduce", help="复现仿真图并与数字化坐标对比")
    p.add_argument("figure", choices=sorted(FIGURES))
    common(p, need_config=False)
    return parser


def cmd_describe(args) -> int:
    descriptor, components = load_topology(args.config)
    summary = summarize(build_topology(descriptor), components)
    print(summary.render())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        stem = os.path.splitext(os.path.basename(args.config))[0]
        path = os.path.join(args.out, f"{stem}_adjacency.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(summary.graph.export_adjacency())
        print(f"邻接表: {path}")
    return 0


def cmd_parts(args) -> int:
    cfg = load_config(args.config)
    orchestrator = ExperimentOrchestrator(cfg, args.out, args.threads, args.seed, args.scale)
    output = orchestrator.run(SUBCOMMAND_PARTS[args.command])
    for kind, path in sorted(output.files.items()):
        print(f"{kind}: {path}")
    return 0


def cmd_reproduce(args) -> int:
    report = reproduce(args.figure, args.scale or "desk", args.out, args.threads, args.seed)
    for kind, path in sorted(report.files.items()):
        print(f"{kind}: {path}")
    print(f"对比 {len(report.comparisons)} 项，不通过 {len(report.failures)} 项")
    for c in report.failures:
        print(f"  {c.series} ρ={c.rho:.2f} 期望 {c.expected:.6g} 得到 {c.observed:.6g} [{c.status}]")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(getattr(args, "verbose", False))
    try:
        if args.command == "describe":
            return cmd_describe(args)
        if args.command == "reproduce":
            return cmd_reproduce(args)
        return cmd_parts(args)
    except CsmaError as e:
        logger.error("[Main] %s: %s", type(e).__name__, e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
