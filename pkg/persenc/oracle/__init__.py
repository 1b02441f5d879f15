from persenc.oracle.oracle import CrosscheckReport, SamplePlan, crosscheck_operation, crosscheck_result, evaluate, transition

__all__ = ["CrosscheckReport", "SamplePlan", "crosscheck_operation", "crosscheck_result", "evaluate", "transition"]
