#!/usr/bin/env python3
"""Regenerates the synthetic mini-corpus in data/minicorpus.

Three small scripts, each written in a different formatting convention, used
by the offline end-to-end test. Output is deterministic.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "minicorpus"

HARBOR_PLACES = ["码头", "渔市", "船坞", "灯塔下", "防波堤", "仓库门口"]
HARBOR_ACTIONS = [
    "海风把帆布吹得啪啪作响，几只海鸥在桅杆上打转。",
    "林秋蹲在船头，用麻绳把破网一点点缝起来。",
    "阿海提着两桶冰走过来，鞋底在木板上留下湿印。",
    "远处传来汽笛声，一艘货轮慢慢驶出港口。",
    "雨点落在铁皮屋顶上，声音越来越密。",
    "老板娘把算盘拨得飞快，抬头看了他们一眼。",
    "潮水退下去，露出一片长满青苔的石阶。",
    "路灯一盏接一盏亮起，照着空荡荡的鱼摊。",
]
HARBOR_LINES = {
    "林秋": ["今天的鱼价又跌了。", "船再不修，下个月就出不了海。", "你信我一次，就这一次。",
            "我爸当年也是在这条船上过的冬。", "别说了，先把账算清楚。", "明早四点，老地方见。"],
    "阿海": ["跌就跌吧，先把船修好。", "钱的事我来想办法。", "你总是一个人扛着。",
            "那批货不对劲，我闻得出来。", "要走你自己走，我留下。", "风向变了，今晚别出海。"],
    "老板娘": ["赊账可以，利息照算。", "你们俩又吵什么？", "这片海养活了三代人。",
             "今年的冬天来得早。", "鱼不等人，人也不等鱼。"],
}

TEA_PLACES = ["茶馆", "后院", "账房", "街口", "戏台", "药铺"]
TEA_META = [("日", "内"), ("夜", "内"), ("日", "外"), ("夜", "外")]
TEA_ACTIONS = [
    "（老周把茶碗轻轻放下，盯着门口。）",
    "（小满抱着一摞账本跑进来，差点撞翻凳子。）",
    "（窗外传来卖糖人的吆喝声。）",
    "（掌柜的咳嗽两声，把算盘推到一边。）",
    "（一阵风吹灭了桌上的油灯。）",
    "（几个客人交换了一下眼色，低头喝茶。）",
]
TEA_LINES = {
    "老周": ["这壶茶，得再等一等才有味。", "账上的窟窿，不是一天挖出来的。", "你年纪轻，别掺和这些事。",
            "当年我也以为能守住这间铺子。", "去，把后门闩上。"],
    "小满": ["师父，外头来了个生面孔。", "我看见他在街口转了三圈。", "要不咱们报官吧？",
            "账本我都对过了，少了二十两。", "您要是不说，我就自己去查。"],
    "掌柜": ["生意人，讲的是一个信字。", "这件事到此为止。", "明天的戏照唱，茶照卖。",
            "谁走漏了风声，我心里有数。"],
}

LIGHT_PLACES = ["Lighthouse", "Harbor Road", "Keeper's Cottage", "Cliff Path", "Boathouse", "Radio Room"]
LIGHT_TIMES = ["Night", "Dawn", "Evening", "Morning"]
LIGHT_ACTIONS = [
    "▲ The lamp turns slowly, sweeping a pale beam across the water.",
    "▲ Maya climbs the spiral stairs, counting each step under her breath.",
    "▲ Rain hammers the glass. The radio crackles and goes silent.",
    "▲ Elias unfolds an old chart and pins it flat with a mug.",
    "▲ A gull lands on the railing, watches them, and flies off.",
    "▲ The generator coughs twice before it catches.",
]
LIGHT_LINES = {
    "MAYA": ["The keeper's log stops in March. Nobody wrote a word after that.",
             "If the light fails tonight, the ferry runs straight onto the rocks.",
             "I didn't come back to sell this place.",
             "Hand me the wrench, and stop looking at me like that.",
             "My father kept this lamp burning for thirty years."],
    "ELIAS": ["The council wants an answer by Friday.",
              "You can't fix a hundred-year-old lens with tape and hope.",
              "I read the log. I know what happened in March.",
              "Storm's turning north. We've got an hour, maybe less.",
              "Nobody asked you to carry this alone."],
    "RUTH": ["The ferry left early. Someone paid the captain to hurry.",
             "I found this in the boathouse. It has your name on it.",
             "Your father would have laughed at both of you."],
}


def harbor(rng):
    out = []
    for n in range(1, 31):
        out.append(f"**{n}**")
        place = rng.choice(HARBOR_PLACES)
        out.append(f"△ {place}，{rng.choice(HARBOR_ACTIONS)}")
        for _ in range(rng.randint(3, 5)):
            who = rng.choice(list(HARBOR_LINES))
            line = rng.choice(HARBOR_LINES[who])
            if rng.random() < 0.2:
                line = f"**{line}**"
            out.append(f"{who}：{line}")
            if rng.random() < 0.3:
                out.append(f"△ {rng.choice(HARBOR_ACTIONS)}")
    return "\n".join(out) + "\n"


def teahouse(rng):
    blocks = []
    for n in range(1, 29):
        day, side = rng.choice(TEA_META)
        blocks.append(f"{n}. {day} {side} {rng.choice(TEA_PLACES)}")
        blocks.append(rng.choice(TEA_ACTIONS))
        for _ in range(rng.randint(3, 4)):
            who = rng.choice(list(TEA_LINES))
            blocks.append(f"{who}\n{rng.choice(TEA_LINES[who])}")
            if rng.random() < 0.3:
                blocks.append(rng.choice(TEA_ACTIONS))
    return "\n\n".join(blocks) + "\n"


def lighthouse(rng):
    out = []
    for n in range(1, 12):
        out.append(f"Scene {n} - {rng.choice(LIGHT_PLACES)} - {rng.choice(LIGHT_TIMES)}")
        out.append("")
        out.append(rng.choice(LIGHT_ACTIONS))
        for _ in range(rng.randint(3, 5)):
            who = rng.choice(list(LIGHT_LINES))
            out.append(f"{who}: {rng.choice(LIGHT_LINES[who])}")
            if rng.random() < 0.4:
                out.append("")
        out.append("")
        if rng.random() < 0.5:
            out.append("")
    return "\n".join(out)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    scripts = {
        "harbor": harbor(random.Random(11)),
        "lighthouse": lighthouse(random.Random(23)),
        "teahouse": teahouse(random.Random(37)),
    }
    for name, body in scripts.items():
        (OUT / f"{name}.txt").write_text(body, encoding="utf-8")
    meta = {
        "harbor": {"title": "Harbor Winter", "year": 1998, "genre": "drama"},
        "lighthouse": {"title": "The Last Keeper", "year": 2011, "genre": "thriller"},
        "teahouse": {"title": "Teahouse Ledger", "year": 1987, "genre": "period"},
    }
    (OUT / "metadata.json").write_text(json.dumps(meta, indent=2, ensure_ascii=False) + "\n",
                                       encoding="utf-8")


if __name__ == "__main__":
    main()
