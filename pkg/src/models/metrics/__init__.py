from src.models.metrics.quality import energy_distance
from src.models.metrics.roc import RocReport, auc, roc_points, roc_report, tpr_at_fpr
