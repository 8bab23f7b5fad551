# coding=utf-8
"""
自定义错误类

定义 ShopRadar 使用的所有异常类型，每类错误自带退出码：
- 0: 正常
- 1: 用法/配置错误
- 2: 数据错误（文件格式、引用完整性）
- 3: 数值错误（NaN/Inf、形状不匹配）
"""

from typing import Optional


class ShopRadarError(Exception):
    """ShopRadar 错误基类"""

    exit_code = 1

    def __init__(self, message: str, code: str = "SHOPRADAR_ERROR", suggestion: Optional[str] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.suggestion = suggestion

    def to_dict(self) -> dict:
        """转换为字典格式"""
        error_dict = {
            "code": self.code,
            "message": self.message
        }
        if self.suggestion:
            error_dict["suggestion"] = self.suggestion
        return error_dict


class UsageError(ShopRadarError):
    """命令行用法错误"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="USAGE_ERROR",
            suggestion=suggestion or "请运行 shopradar --help 查看用法"
        )


class ConfigurationError(ShopRadarError):
    """配置错误"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="CONFIGURATION_ERROR",
            suggestion=suggestion or "请检查 config/config.yaml 是否正确"
        )


class InvalidParameterError(ShopRadarError):
    """参数无效错误"""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="INVALID_PARAMETER",
            suggestion=suggestion or "请检查参数格式是否正确"
        )


class DataError(ShopRadarError):
    """数据错误（语料、索引、嵌入文件）"""

    exit_code = 2

    def __init__(self, message: str, code: str = "DATA_ERROR", suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code=code,
            suggestion=suggestion or "请检查数据文件是否完整，必要时重新运行 gen-data"
        )


class DanglingReferenceError(DataError):
    """引用了不存在的实体"""

    def __init__(self, kind: str, entity_id: int, source: str = ""):
        where = f"（{source}）" if source else ""
        super().__init__(
            message=f"引用了不存在的 {kind} id={entity_id}{where}",
            code="DANGLING_REFERENCE",
        )
        self.kind = kind
        self.entity_id = entity_id


class MalformedRecordError(DataError):
    """文件行解析失败"""

    def __init__(self, file_path: str, line_no: int, reason: str):
        super().__init__(
            message=f"解析文件 {file_path} 第 {line_no} 行失败: {reason}",
            code="MALFORMED_RECORD",
            suggestion="请检查文件格式是否为每行一个 JSON 对象"
        )
        self.file_path = file_path
        self.line_no = line_no


class CheckpointFormatError(DataError):
    """参数检查点格式错误"""

    def __init__(self, message: str):
        super().__init__(message=message, code="CHECKPOINT_FORMAT_ERROR",
                         suggestion="请重新运行 train 生成检查点")


class IndexFormatError(DataError):
    """索引或嵌入文件格式错误"""

    def __init__(self, message: str):
        super().__init__(message=message, code="INDEX_FORMAT_ERROR",
                         suggestion="请重新运行 export / build-index")


class NumericError(ShopRadarError):
    """数值错误：NaN/Inf 或训练发散"""

    exit_code = 3

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message=message,
            code="NUMERIC_ERROR",
            suggestion=suggestion or "请尝试降低学习率或温度参数"
        )


class ShapeError(ShopRadarError):
    """张量形状不匹配"""

    exit_code = 3

    def __init__(self, message: str):
        super().__init__(message=message, code="SHAPE_ERROR")
