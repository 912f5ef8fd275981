"""CASE03のe2eテスト実行スクリプト."""

import math
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from tolerant.core.models import PredictionParam  # noqa: E402
from tolerant.core.normal.distribution import std_normal_quantile  # noqa: E402
from tolerant.core.simulation.harness import (  # noqa: E402
    render_asymptotic_table,
    run_asymptotic_diagnostic,
)
from tolerant.schemas.tolerance import ToleranceSpec  # noqa: E402

N_VALUES = [50, 200, 800]
SPEC = ToleranceSpec(delta=0.1, alpha=0.05)


def run_case03_test() -> bool:
    """CASE03のテストを実行する.

    Returns:
        すべてのテストがパスした場合True、それ以外はFalse
    """
    print("漸近診断を実行中...")
    try:
        rows = run_asymptotic_diagnostic(
            N_VALUES, PredictionParam(0.0, 1.0), SPEC, datasets=200, n_draws=10_000
        )
    except Exception as e:
        print(f"  エラー: {e}")
        return False

    print()
    print(render_asymptotic_table(rows))

    limit = (
        std_normal_quantile(1.0 - SPEC.alpha)
        * std_normal_quantile(1.0 - SPEC.delta / 2.0)
        / math.sqrt(2.0)
    )
    last = rows[-1]
    center_gaps = [r.mean_center_gap for r in rows]
    checks = [
        (
            "n=800 の差 / 補正項",
            abs(last.mean_gap) / last.correction_term,
            "≤ 0.30",
            abs(last.mean_gap) <= 0.3 * last.correction_term,
        ),
        (
            "|A−x̄| の減少（n=50 → 800）",
            center_gaps[-1] / center_gaps[0],
            "< 1",
            all(b < a for a, b in zip(center_gaps, center_gaps[1:])),
        ),
        (
            "n=800 の √n·超過 / 極限値",
            last.scaled_excess / limit,
            "1 ± 0.15",
            abs(last.scaled_excess / limit - 1.0) <= 0.15,
        ),
    ]
    all_passed = all(passed for *_, passed in checks)

    # 結果を表示
    print("【テスト結果】")
    print("-" * 72)
    print(f"{'項目':^30} {'観測値':^10} {'基準':^10} {'結果':^10}")
    print("-" * 72)
    for item, observed, criterion, passed in checks:
        status = "✅ PASS" if passed else "❌ FAIL"
        print(f"{item:^30} {observed:^10.4f} {criterion:^10} {status:^10}")

    print("-" * 72)
    print(
        "\n総合結果: "
        + (
            "✅ すべてのテストがパスしました"
            if all_passed
            else "❌ 一部のテストが失敗しました"
        )
    )

    return all_passed


if __name__ == "__main__":
    success = run_case03_test()
    sys.exit(0 if success else 1)
