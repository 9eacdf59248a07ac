from .campaign import CampaignError, CampaignResult, run_campaign
from .results import ResultRecord, read_results, write_results

__all__ = ["CampaignError", "CampaignResult", "ResultRecord", "read_results", "run_campaign",
           "write_results"]
